// Copyright 2026 The gridstab Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gridstab/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <boost/math/tools/minima.hpp>

namespace gridstab::experiments {

using std::numbers::pi;
using fock::Oscillator;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Runs task(i) for i in [0, n) on up to `threads` workers. Results are
// written by index, so ordering never depends on scheduling.
template <class Task>
void parallel_for(int n, int threads, Task task) {
    threads = std::max(1, std::min(threads, n));
    if (threads == 1) {
        for (int i = 0; i < n; ++i) task(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(threads);
    for (int w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = next++; i < n; i = next++) task(i);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

double median(std::vector<double> v) {
    if (v.empty()) return kNaN;
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

// ---------------------------------------------------------------- fitting

nlohmann::json DecayFit::to_json() const {
    return {{"observable", observable}, {"t_min", t_min},       {"t_max", t_max},
            {"rate", rate},             {"amplitude", amplitude}, {"residual", residual},
            {"points", points},         {"transient_skip", transient_skip}};
}

DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y, double t_min,
                         double t_max, const std::string& name) {
    if (t.size() != y.size()) throw ShapeMismatch("fit_exponential: t and y differ in length");
    if (!(t_min < t_max)) throw InvalidParameter("fit_exponential: empty window");
    std::vector<double> xs, ls;
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] < t_min || t[i] > t_max) continue;
        if (!(y[i] > 0.0) || !std::isfinite(y[i])) continue;
        xs.push_back(t[i]);
        ls.push_back(std::log(y[i]));
    }
    const int m = static_cast<int>(xs.size());
    if (m < 3) throw FitFailure("fit_exponential: fewer than 3 positive samples in window");
    Eigen::MatrixXd a(m, 2);
    Eigen::VectorXd b(m);
    for (int i = 0; i < m; ++i) {
        a(i, 0) = 1.0;
        a(i, 1) = xs[i];
        b(i) = ls[i];
    }
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(b);
    DecayFit f;
    f.observable = name;
    f.t_min = xs.front();
    f.t_max = xs.back();
    f.rate = -c(1);
    f.amplitude = std::exp(c(0));
    f.residual = std::sqrt((a * c - b).squaredNorm() / m);
    f.points = m;
    f.transient_skip = t_min;
    return f;
}

nlohmann::json PowerLawFit::to_json() const {
    nlohmann::json cov = nlohmann::json::array();
    for (int i = 0; i < covariance.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (int j = 0; j < covariance.cols(); ++j) row.push_back(covariance(i, j));
        cov.push_back(row);
    }
    nlohmann::json j = {{"A", A}, {"n", n}, {"cells", cells}, {"covariance", cov}, {"residuals", residuals}};
    j["r"] = std::isnan(r) ? nlohmann::json(nullptr) : nlohmann::json(r);
    return j;
}

PowerLawFit fit_power_law(const std::vector<double>& kappa, const std::vector<double>& epsilon,
                          const std::vector<double>& rate, int min_cells) {
    const std::size_t m = rate.size();
    if (kappa.size() != m || epsilon.size() != m) throw ShapeMismatch("fit_power_law: length mismatch");
    if (static_cast<int>(m) < min_cells) {
        std::ostringstream os;
        os << "fit_power_law: " << m << " cells, need " << min_cells;
        throw FitFailure(os.str());
    }
    for (std::size_t i = 0; i < m; ++i)
        if (!(kappa[i] > 0 && epsilon[i] > 0 && rate[i] > 0)) throw FitFailure("fit_power_law: non-positive input");
    const bool single_eps = std::all_of(epsilon.begin(), epsilon.end(),
                                        [&](double e) { return std::abs(e - epsilon[0]) <= 1e-15 * e; });
    const int p = single_eps ? 2 : 3;
    if (static_cast<int>(m) < p) throw FitFailure("fit_power_law: underdetermined");
    Eigen::MatrixXd x(m, p);
    Eigen::VectorXd b(m);
    for (std::size_t i = 0; i < m; ++i) {
        x(i, 0) = 1.0;
        x(i, 1) = std::log(kappa[i]);
        if (!single_eps) x(i, 2) = -std::log(epsilon[i]);
        b(i) = std::log(rate[i]);
    }
    const Eigen::VectorXd c = x.colPivHouseholderQr().solve(b);
    const Eigen::VectorXd res = x * c - b;
    PowerLawFit f;
    f.A = std::exp(c(0));
    f.n = c(1);
    f.r = single_eps ? kNaN : c(2);
    f.cells = static_cast<int>(m);
    f.residuals.assign(res.data(), res.data() + m);
    const double dof = static_cast<double>(m) - p;
    const double s2 = dof > 0 ? res.squaredNorm() / dof : 0.0;
    f.covariance = s2 * (x.transpose() * x).inverse();
    return f;
}

// ---------------------------------------------------------- stabilization

StabilizationResult run_stabilization(int dim, const GkpParams& params, const QuantumState& rho0,
                                      double t_final, const StabilizationOptions& opt) {
    const Oscillator osc(dim);
    const auto model = lindblad::make_stabilizer_model(osc, params.eta, params.epsilon, opt.kappa);

    lindblad::RecordSpec rec;
    rec.n_records = opt.n_records;
    rec.store_states = true;
    rec.observables.push_back({"N", osc.number()});
    if (params.d == 2) {
        const auto frame = gkp::build_logical_frame(osc, params);
        rec.observables.push_back({"Z", frame.z});
        rec.observables.push_back({"X", frame.x});
        rec.observables.push_back({"Y", frame.y});
    }

    TrajectoryRecord record = lindblad::integrate(model, rho0, t_final, opt.solver, rec);
    const QuantumState last = record.final_state();

    auto make_target = [&](double eps_t) {
        const GkpParams p = GkpParams::from_lattice(params.d, eps_t);
        return params.d == 2 ? gkp::build_logical_state(dim, p, gkp::LogicalLabel::Magic)
                             : gkp::build_codeword(dim, p, 0);
    };

    double eps_target = params.epsilon;
    std::vector<std::pair<double, double>> scan;
    if (params.d == 2 && opt.search_target_epsilon) {
        const double lo = opt.target_epsilon_min, hi = opt.target_epsilon_max;
        for (int i = 0; i <= 10; ++i) {
            const double e = lo + (hi - lo) * i / 10.0;
            scan.emplace_back(e, gkp::fidelity(last, make_target(e)));
        }
        eps_target = boost::math::tools::brent_find_minima(
                         [&](double e) { return -gkp::fidelity(last, make_target(e)); }, lo, hi, 24)
                         .first;
    }
    QuantumState target = make_target(eps_target);

    std::vector<double> fid;
    fid.reserve(record.states.size());
    for (const auto& s : record.states) fid.push_back(gkp::fidelity(s, target));
    record.series.emplace_back("fidelity", std::move(fid));
    const double final_fid = gkp::fidelity(last, target);
    const double final_n = record.get("N").back();
    return StabilizationResult{std::move(record), std::move(target), eps_target, final_fid, final_n, std::move(scan)};
}

// ------------------------------------------------------------------ energy

nlohmann::json EnergyCertificate::to_json() const {
    nlohmann::json mu_tab = nlohmann::json::array();
    for (const auto& [c, m] : mu_by_cutoff) mu_tab.push_back({{"cutoff", c}, {"mu", m}});
    return {{"epsilon", epsilon},
            {"eta", eta},
            {"r", r},
            {"lambda", lambda},
            {"mu", mu},
            {"mu_over_lambda", mu / lambda},
            {"mu_by_cutoff", mu_tab},
            {"mu_relative_change", mu_relative_change},
            {"mu_stable", mu_stable},
            {"initial_photon_number", initial_photon_number},
            {"trajectory_bound", trajectory_bound},
            {"max_photon_number", max_photon_number},
            {"trajectory_ok", trajectory_ok},
            {"energy_spot_check", energy_spot_check}};
}

EnergyCertificate certify_energy_bound(int dim, double eta, double epsilon, double r, const EnergyOptions& opt) {
    if (!(epsilon > 0.0) || !(eta > 0.0)) throw InvalidParameter("certify_energy_bound: eps and eta must be positive");
    if (!(epsilon < 2.0 / eta)) throw InvalidParameter("certify_energy_bound: requires eps < 2/eta");
    if (!(r > 0.0 && r < 1.0)) throw InvalidParameter("certify_energy_bound: r must lie in (0, 1)");
    if (opt.cutoff_fractions.empty()) throw InvalidParameter("certify_energy_bound: no cutoffs");

    const Oscillator osc(dim);
    const auto model = lindblad::make_stabilizer_model(osc, eta, epsilon, 0.0);
    EnergyCertificate cert;
    cert.epsilon = epsilon;
    cert.eta = eta;
    cert.r = r;
    cert.lambda = 2.0 * r * epsilon * eta * (1.0 - epsilon * eta / 2.0);

    const Matrix g = lindblad::apply_adjoint(model, osc.number()).matrix() + cert.lambda * osc.number().matrix();
    for (double frac : opt.cutoff_fractions) {
        const int c = static_cast<int>(std::lround(frac * dim));
        if (c < 1 || c > dim) throw InvalidParameter("certify_energy_bound: cutoff outside truncation");
        Eigen::SelfAdjointEigenSolver<Matrix> es(g.topLeftCorner(c, c), Eigen::EigenvaluesOnly);
        cert.mu_by_cutoff.emplace_back(c, es.eigenvalues().maxCoeff());
    }
    cert.mu = cert.mu_by_cutoff.back().second;
    if (cert.mu_by_cutoff.size() >= 2) {
        const double prev = cert.mu_by_cutoff[cert.mu_by_cutoff.size() - 2].second;
        cert.mu_relative_change = std::abs(cert.mu - prev) / std::abs(cert.mu);
    }
    cert.mu_stable = std::isfinite(cert.mu) && cert.mu_relative_change <= 0.01;

    {
        const auto spot = osc.of_q([eta](double x) { return -x * std::sin(2 * eta * x) - std::abs(x); });
        const int c = fock::InteriorProjector::fraction(dim).cutoff();
        Eigen::SelfAdjointEigenSolver<Matrix> es(spot.matrix().topLeftCorner(c, c), Eigen::EigenvaluesOnly);
        cert.energy_spot_check = es.eigenvalues().maxCoeff();
    }

    if (!cert.mu_stable) {
        std::ostringstream os;
        os << "energy certificate: mu moved by " << cert.mu_relative_change * 100 << "% across cutoffs";
        throw CertificationFailure(os.str(), cert);
    }

    if (opt.run_trajectory) {
        const QuantumState start = gkp::coherent_state(dim, cplx(opt.coherent_amplitude, 0.0));
        lindblad::RecordSpec rec;
        rec.n_records = opt.n_records;
        rec.observables.push_back({"N", osc.number()});
        const auto traj = lindblad::integrate(model, start, opt.t_final, opt.solver, rec);
        cert.times = traj.times;
        cert.photon_number = traj.get("N");
        cert.initial_photon_number = cert.photon_number.front();
        cert.trajectory_bound = std::max(cert.initial_photon_number, cert.mu / cert.lambda) + 0.5;
        cert.max_photon_number = *std::max_element(cert.photon_number.begin(), cert.photon_number.end());
        cert.trajectory_ok = cert.max_photon_number <= cert.trajectory_bound;
    }
    return cert;
}

// ---------------------------------------------------------------- contrast

LogicalAxis parse_axis(const std::string& s) {
    if (s == "Z" || s == "z") return LogicalAxis::Z;
    if (s == "X" || s == "x") return LogicalAxis::X;
    if (s == "Y" || s == "y") return LogicalAxis::Y;
    throw InvalidParameter("unknown logical axis '" + s + "'");
}

std::string to_string(LogicalAxis a) {
    switch (a) {
        case LogicalAxis::Z: return "Z";
        case LogicalAxis::X: return "X";
        case LogicalAxis::Y: return "Y";
    }
    return "?";
}

ContrastDecay run_contrast_decay(int dim, const GkpParams& params, double kappa, LogicalAxis axis,
                                 double horizon, const ContrastOptions& opt) {
    if (params.d != 2) throw InvalidParameter("run_contrast_decay: requires d = 2");
    if (!(horizon > 0.0)) throw InvalidParameter("run_contrast_decay: horizon must be positive");
    const Oscillator osc(dim);
    const auto model = lindblad::make_stabilizer_model(osc, params.eta, params.epsilon, kappa);
    const auto frame = gkp::build_logical_frame(osc, params);

    using gkp::LogicalLabel;
    LogicalLabel lp = LogicalLabel::PlusZ, lm = LogicalLabel::MinusZ;
    const fock::FockOperator* op = &frame.z;
    if (axis == LogicalAxis::X) {
        lp = LogicalLabel::PlusX;
        lm = LogicalLabel::MinusX;
        op = &frame.x;
    } else if (axis == LogicalAxis::Y) {
        lp = LogicalLabel::PlusY;
        lm = LogicalLabel::MinusY;
        op = &frame.y;
    }
    const std::string name = to_string(axis);

    lindblad::RecordSpec rec;
    rec.n_records = opt.n_records;
    rec.observables.push_back({"N", osc.number()});
    rec.observables.push_back({name, *op});

    ContrastDecay out;
    out.kappa = kappa;
    out.epsilon = params.epsilon;
    out.axis = axis;
    const QuantumState sp = gkp::build_logical_state(dim, params, lp);
    const QuantumState sm = gkp::build_logical_state(dim, params, lm);
    parallel_for(2, opt.threads, [&](int i) {
        auto r = lindblad::integrate(model, i == 0 ? sp : sm, horizon, opt.solver, rec);
        (i == 0 ? out.plus : out.minus) = std::move(r);
    });

    out.times = out.plus.times;
    const auto& op_p = out.plus.get(name);
    const auto& op_m = out.minus.get(name);
    const auto& np = out.plus.get("N");
    const auto& nm = out.minus.get("N");
    const std::size_t m = out.times.size();
    out.contrast.resize(m);
    out.photon_number.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        out.contrast[i] = 0.5 * (op_p[i] - op_m[i]);
        out.photon_number[i] = 0.5 * (np[i] + nm[i]);
    }

    // transient skip: first record after which <N> stays within the band
    const double n_final = out.photon_number.back();
    std::size_t open = m - 1;
    while (open > 0 && std::abs(out.photon_number[open - 1] - n_final) <= opt.settle_fraction * std::abs(n_final)) --open;
    for (std::size_t i = 0; i < open; ++i) {
        if (std::abs(out.contrast[i]) < 1e-6) {
            std::ostringstream os;
            os << "contrast underflow at t=" << out.times[i] << " before the fit window opens at t=" << out.times[open]
               << "; shorten the horizon or reduce kappa";
            throw FitFailure(os.str());
        }
    }
    if (open + 3 > m) throw FitFailure("run_contrast_decay: photon number has not settled within the horizon");
    out.fit = fit_exponential(out.times, out.contrast, out.times[open], out.times.back(), name);
    out.fit.transient_skip = out.times[open];
    return out;
}

// ------------------------------------------------------------------- sweep

double sweep_horizon(const SweepSpec& spec, double kappa, double epsilon) {
    const double guess = std::pow(kappa, 0.88) / std::pow(epsilon, 0.57);
    return std::min(spec.horizon_decays / guess, spec.horizon_max);
}

SweepResult run_scaling_sweep(const SweepSpec& spec) {
    if (spec.kappa_values.empty() || spec.epsilon_values.empty()) throw InvalidParameter("sweep: empty grid");
    if (!(spec.eta > 0.0)) throw InvalidParameter("sweep: eta must be positive");
    for (double k : spec.kappa_values)
        if (!(k > 0.0 && k < 1.0)) throw InvalidParameter("sweep: kappa must lie in (0, 1)");
    for (double e : spec.epsilon_values)
        if (!(e > 0.0)) throw InvalidParameter("sweep: epsilon must be positive");

    SweepResult res;
    for (double k : spec.kappa_values)
        for (double e : spec.epsilon_values) {
            SweepCell c;
            c.kappa = k;
            c.epsilon = e;
            c.horizon = sweep_horizon(spec, k, e);
            res.cells.push_back(c);
        }

    ContrastOptions copt = spec.contrast;
    copt.threads = 1;
    parallel_for(static_cast<int>(res.cells.size()), spec.threads, [&](int i) {
        SweepCell& c = res.cells[i];
        try {
            GkpParams p = GkpParams::qubit(c.epsilon);
            p.eta = spec.eta;
            p.eta_square = 2 * spec.eta;
            c.fit = run_contrast_decay(spec.dim, p, c.kappa, LogicalAxis::Z, c.horizon, copt).fit;
            c.valid = c.fit.rate > 0.0;
            if (!c.valid) c.error = "non-positive decay rate";
        } catch (const std::exception& e) {
            c.valid = false;
            c.error = e.what();
        }
    });

    std::vector<double> ks, es, gs;
    for (const auto& c : res.cells)
        if (c.valid) {
            ks.push_back(c.kappa);
            es.push_back(c.epsilon);
            gs.push_back(c.fit.rate);
        }
    try {
        // a single-epsilon row only determines (A, n); it needs 3 cells instead of 6
        res.fit = fit_power_law(ks, es, gs, spec.epsilon_values.size() == 1 ? 3 : 6);
    } catch (const FitFailure& e) {
        res.fit_error = e.what();
    }
    return res;
}

void write_sweep_table(const std::string& path, const SweepResult& result) {
    std::ofstream out(path);
    if (!out) throw InvalidParameter("cannot open " + path);
    out.precision(12);
    out << "kappa,epsilon,horizon,valid,rate,amplitude,residual,t_min,t_max\n";
    for (const auto& c : result.cells) {
        out << c.kappa << ',' << c.epsilon << ',' << c.horizon << ',' << (c.valid ? "true" : "false") << ',';
        if (c.valid)
            out << c.fit.rate << ',' << c.fit.amplitude << ',' << c.fit.residual << ',' << c.fit.t_min << ','
                << c.fit.t_max;
        else
            out << "nan,nan,nan,nan,nan";
        out << '\n';
    }
}

// ---------------------------------------------------------------- qunaught

double peak_spacing(const std::vector<double>& xs, const std::vector<double>& ys, double rel_height) {
    const auto peaks = gkp::local_maxima(xs, ys, rel_height);
    std::vector<double> d;
    for (std::size_t i = 1; i < peaks.size(); ++i) d.push_back(peaks[i] - peaks[i - 1]);
    return median(d);
}

QunaughtStudy run_qunaught_noise_study(int dim, double epsilon, const std::vector<double>& kappa_values,
                                       const QunaughtOptions& opt) {
    if (kappa_values.empty()) throw InvalidParameter("qunaught study: no kappa values");
    const GkpParams params = GkpParams::qunaught(epsilon);
    const Oscillator osc(dim);
    const auto mod = osc.of_q_complex([&](double x) { return std::polar(1.0, 2 * params.eta * x); });
    QunaughtStudy st;
    st.points.resize(kappa_values.size());
    parallel_for(static_cast<int>(kappa_values.size()), opt.threads, [&](int i) {
        QunaughtPoint& pt = st.points[i];
        pt.kappa = kappa_values[i];
        if (pt.kappa < 0.0) throw InvalidParameter("qunaught study: kappa must be >= 0");
        const auto model = lindblad::make_stabilizer_model(osc, params.eta, epsilon, pt.kappa);
        pt.steady = lindblad::steady_state(model, gkp::fock_state(dim, 0), opt.steady);
        pt.converged = true;
        const QuantumState s = pt.steady.state();
        pt.wigner = gkp::wigner(s, opt.grid);
        pt.visibility = std::abs((mod.matrix() * pt.steady.rho).trace());
        pt.spacing_x = peak_spacing(pt.wigner.x, pt.wigner.x_marginal());
        pt.spacing_p = peak_spacing(pt.wigner.p, pt.wigner.p_marginal());
    });
    st.strictly_decreasing = true;
    for (std::size_t i = 1; i < st.points.size(); ++i)
        if (!(st.points[i].visibility < st.points[i - 1].visibility)) st.strictly_decreasing = false;
    return st;
}

// ------------------------------------------------------------- cross-check

nlohmann::json CrossCheck::to_json() const {
    return {{"epsilon", epsilon},
            {"eta", eta},
            {"sigma", sigma},
            {"lambda1", lambda1},
            {"predicted_rate", predicted_rate},
            {"fit", fit.to_json()},
            {"ratio", ratio},
            {"stationary_value", stationary_value},
            {"weighted_mean_generator", weighted_mean_generator},
            {"weighted_mean_closed_form", weighted_mean_closed_form}};
}

CrossCheck cross_check_reduced_model(int dim, double epsilon, double eta, const CrossCheckOptions& opt) {
    const auto rp = reduced::ReducedParams::from_physical(epsilon, eta);
    CrossCheck cc;
    cc.epsilon = epsilon;
    cc.eta = eta;
    cc.sigma = rp.sigma;
    cc.lambda1 = reduced::converged_gap(rp, opt.n_grid).lambda1;
    cc.predicted_rate = reduced::predicted_rate(epsilon, eta, cc.lambda1);
    const auto cos_theta = [](double t) { return std::cos(t); };
    cc.weighted_mean_closed_form = reduced::weighted_mean(rp.sigma, cos_theta);
    cc.weighted_mean_generator = reduced::weighted_mean(reduced::generator_sigma(epsilon, eta), cos_theta);

    const Oscillator osc(dim);
    GkpParams p = GkpParams::qubit(epsilon);
    p.eta = eta;
    p.eta_square = 2 * eta;
    const QuantumState start = gkp::translate_q(osc, gkp::build_codeword(dim, p, 0), std::sqrt(pi) / 4);
    const auto model = lindblad::make_stabilizer_model(osc, eta, epsilon, 0.0);
    lindblad::RecordSpec rec;
    rec.n_records = opt.n_records;
    rec.observables.push_back({"cos", osc.of_q([eta](double x) { return std::cos(2 * eta * x); })});
    const auto traj = lindblad::integrate(model, start, opt.horizon, opt.solver, rec);

    cc.times = traj.times;
    cc.values = traj.get("cos");
    cc.stationary_value = cc.values.back();
    const double span = std::abs(cc.values.front() - cc.stationary_value);
    std::vector<double> dev(cc.values.size());
    double t_end = opt.window_start;
    for (std::size_t i = 0; i < dev.size(); ++i) {
        dev[i] = std::abs(cc.values[i] - cc.stationary_value);
        if (cc.times[i] >= opt.window_start && dev[i] >= opt.floor * span) t_end = cc.times[i];
    }
    cc.fit = fit_exponential(cc.times, dev, opt.window_start, t_end, "cos(2 eta q)");
    cc.ratio = cc.fit.rate / cc.predicted_rate;
    return cc;
}

}  // namespace gridstab::experiments
