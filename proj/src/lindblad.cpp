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

#include "gridstab/lindblad.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <openssl/sha.h>

namespace gridstab::lindblad {

namespace {

constexpr double kAbortCorrection = 1e-4;
constexpr double kTraceDriftPerTime = 1e-6;
constexpr double kAbortNegativity = -1e-4;

void require_dim(const Matrix& m, int dim, const char* where) {
    if (m.rows() != dim || m.cols() != dim) {
        throw ShapeMismatch(std::string(where) + ": expected " + std::to_string(dim) + "x" +
                            std::to_string(dim) + " matrix");
    }
}

// Tr(A B) for square matrices in O(n^2).
double trace_product(const Matrix& a, const Matrix& b) {
    return a.transpose().cwiseProduct(b).sum().real();
}

double min_eigenvalue(const Matrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(rho, Eigen::EigenvaluesOnly);
    return solver.eigenvalues().minCoeff();
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                 a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                 a64 = 49.0 / 176, a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784,
                 b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                 e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

double error_norm(const Matrix& err, const Matrix& y0, const Matrix& y1, double atol,
                  double rtol) {
    double acc = 0.0;
    const Eigen::Index n = err.size();
    const cplx* e = err.data();
    const cplx* p = y0.data();
    const cplx* q = y1.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        const double scale = atol + rtol * std::max(std::abs(p[i]), std::abs(q[i]));
        const double r = std::abs(e[i]) / scale;
        acc += r * r;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace

LindbladModel::LindbladModel(int dim, std::vector<Jump> jumps) : dim_(dim), jumps_(std::move(jumps)) {
    if (dim < 1) throw InvalidDimension("LindbladModel: dim must be >= 1");
    half_decay_ = Matrix::Zero(dim, dim);
    for (const Jump& j : jumps_) {
        if (j.op.dim() != dim) throw ShapeMismatch("LindbladModel: jump '" + j.name + "' has wrong dimension");
        if (!(j.rate >= 0.0) || !std::isfinite(j.rate)) {
            throw InvalidParameter("LindbladModel: rate of '" + j.name + "' must be non-negative");
        }
        if (j.rate == 0.0) continue;
        Matrix w = std::sqrt(j.rate) * j.op.matrix();
        half_decay_.noalias() += 0.5 * (w.adjoint() * w);
        weighted_adj_.push_back(w.adjoint());
        weighted_.push_back(std::move(w));
    }
    half_decay_ = 0.5 * (half_decay_ + half_decay_.adjoint()).eval();
}

void LindbladModel::apply(const Matrix& rho, Matrix& out) const {
    require_dim(rho, dim_, "LindbladModel::apply");
    Matrix tmp(dim_, dim_);
    tmp.noalias() = half_decay_ * rho;
    out = -tmp;
    out.noalias() -= tmp.adjoint();
    for (std::size_t i = 0; i < weighted_.size(); ++i) {
        tmp.noalias() = weighted_[i] * rho;
        out.noalias() += tmp * weighted_adj_[i];
    }
}

Matrix LindbladModel::apply(const Matrix& rho) const {
    Matrix out;
    apply(rho, out);
    return out;
}

Matrix LindbladModel::apply_adjoint(const Matrix& o) const {
    require_dim(o, dim_, "LindbladModel::apply_adjoint");
    Matrix tmp(dim_, dim_);
    tmp.noalias() = half_decay_ * o;
    Matrix out = -tmp;
    out.noalias() -= tmp.adjoint();
    for (std::size_t i = 0; i < weighted_.size(); ++i) {
        tmp.noalias() = weighted_adj_[i] * o;
        out.noalias() += tmp * weighted_[i];
    }
    return out;
}

nlohmann::json LindbladModel::describe() const {
    nlohmann::json j = {{"dim", dim_}, {"jumps", nlohmann::json::array()}};
    for (const Jump& jump : jumps_) j["jumps"].push_back({{"name", jump.name}, {"rate", jump.rate}});
    return j;
}

LindbladModel make_stabilizer_model(const fock::Oscillator& osc, double eta, double epsilon,
                                    double kappa) {
    if (!(kappa >= 0.0)) throw InvalidParameter("make_stabilizer_model: kappa must be >= 0");
    auto [m1, m2] = fock::build_two_dissipators(osc, eta, epsilon);
    std::vector<Jump> jumps{{std::move(m1), 1.0, "M1"}, {std::move(m2), 1.0, "M2"}};
    if (kappa > 0.0) jumps.push_back({osc.a(), kappa, "a"});
    return {osc.dim(), std::move(jumps)};
}

LindbladModel make_loss_model(const fock::Oscillator& osc, double kappa) {
    return {osc.dim(), {{osc.a(), kappa, "a"}}};
}

FockOperator apply_generator(const LindbladModel& model, const QuantumState& rho) {
    if (rho.dim() != model.dim()) throw ShapeMismatch("apply_generator: dimension mismatch");
    Matrix out = model.apply(rho.density());
    return FockOperator(0.5 * (out + out.adjoint()), FockOperator::Hermiticity::Hermitian);
}

FockOperator apply_adjoint(const LindbladModel& model, const FockOperator& o) {
    if (!o.hermitian()) throw ContractViolation("apply_adjoint: observable must be Hermitian");
    if (o.dim() != model.dim()) throw ShapeMismatch("apply_adjoint: dimension mismatch");
    Matrix out = model.apply_adjoint(o.matrix());
    return FockOperator(0.5 * (out + out.adjoint()), FockOperator::Hermiticity::Hermitian);
}

nlohmann::json ToleranceSpec::to_json() const {
    return {{"rtol", rtol},
            {"atol", atol},
            {"initial_step", initial_step},
            {"min_step", min_step},
            {"max_step", std::isfinite(max_step) ? nlohmann::json(max_step) : nlohmann::json("inf")},
            {"max_steps", max_steps}};
}

double Diagnostics::max_trace_correction() const {
    return trace_corrections.empty() ? 0.0
                                     : *std::max_element(trace_corrections.begin(), trace_corrections.end());
}

double Diagnostics::max_hermitian_correction() const {
    return hermitian_corrections.empty()
               ? 0.0
               : *std::max_element(hermitian_corrections.begin(), hermitian_corrections.end());
}

double Diagnostics::min_eigenvalue() const {
    double m = std::numeric_limits<double>::infinity();
    for (double v : min_eigenvalues) {
        if (!std::isnan(v)) m = std::min(m, v);
    }
    return m;
}

nlohmann::json Diagnostics::summary() const {
    double h_min = 0.0, h_max = 0.0;
    if (!step_sizes.empty()) {
        h_min = *std::min_element(step_sizes.begin(), step_sizes.end());
        h_max = *std::max_element(step_sizes.begin(), step_sizes.end());
    }
    const double me = min_eigenvalue();
    return {{"accepted_steps", accepted_steps},
            {"rejected_steps", rejected_steps},
            {"evaluations", evaluations},
            {"min_step", h_min},
            {"max_step", h_max},
            {"max_trace_correction", max_trace_correction()},
            {"total_trace_correction", total_trace_correction},
            {"max_hermitian_correction", max_hermitian_correction()},
            {"min_eigenvalue", std::isfinite(me) ? nlohmann::json(me) : nlohmann::json(nullptr)}};
}

const std::vector<double>& TrajectoryRecord::get(const std::string& name) const {
    for (const auto& [key, values] : series) {
        if (key == name) return values;
    }
    throw InvalidParameter("TrajectoryRecord: no series named '" + name + "'");
}

bool TrajectoryRecord::has(const std::string& name) const {
    return std::any_of(series.begin(), series.end(), [&](const auto& s) { return s.first == name; });
}

QuantumState TrajectoryRecord::final_state() const {
    return QuantumState::mixed_unchecked_positivity(final_rho);
}

namespace {

class Recorder {
public:
    Recorder(const RecordSpec& spec, TrajectoryRecord& out) : spec_(spec), out_(out) {
        for (const auto& obs : spec.observables) out_.series.emplace_back(obs.name, std::vector<double>{});
        out_.series.emplace_back("purity", std::vector<double>{});
        if (spec.target) {
            if (!spec.target->is_pure()) throw ContractViolation("RecordSpec: target must be pure");
            out_.series.emplace_back("fidelity", std::vector<double>{});
        }
    }

    void record(double t, const Matrix& rho) {
        out_.times.push_back(t);
        std::size_t k = 0;
        for (const auto& obs : spec_.observables) out_.series[k++].second.push_back(trace_product(obs.op.matrix(), rho));
        out_.series[k++].second.push_back(rho.cwiseAbs2().sum());
        if (spec_.target) {
            const Vector& v = spec_.target->vector();
            out_.series[k++].second.push_back(v.dot(rho * v).real());
        }
        out_.trace_errors.push_back(std::abs(rho.trace() - cplx(1.0, 0.0)));
        double me = std::numeric_limits<double>::quiet_NaN();
        if (spec_.check_positivity) {
            me = min_eigenvalue(rho);
            if (me < kAbortNegativity) {
                throw InvariantBreach("integrate: recorded state has eigenvalue " + std::to_string(me), t);
            }
        }
        out_.diagnostics.min_eigenvalues.push_back(me);
        if (spec_.store_states) out_.states.push_back(QuantumState::mixed_unchecked_positivity(rho));
    }

private:
    const RecordSpec& spec_;
    TrajectoryRecord& out_;
};

}  // namespace

TrajectoryRecord integrate(const LindbladModel& model, const QuantumState& rho0, double t_final,
                           const ToleranceSpec& solver, const RecordSpec& record) {
    if (rho0.dim() != model.dim()) throw ShapeMismatch("integrate: state/model dimension mismatch");
    if (!(t_final >= 0.0) || !std::isfinite(t_final)) {
        throw InvalidParameter("integrate: t_final must be finite and non-negative");
    }
    if (t_final > 0.0 && record.n_records < 2) throw InvalidParameter("integrate: need n_records >= 2");
    if (!(solver.rtol > 0.0) || !(solver.atol > 0.0)) throw InvalidParameter("integrate: tolerances must be positive");

    TrajectoryRecord out;
    Recorder recorder(record, out);
    Diagnostics& diag = out.diagnostics;

    const int n = model.dim();
    Matrix y = rho0.density();
    recorder.record(0.0, y);
    if (t_final == 0.0) {
        out.final_rho = y;
        return out;
    }

    Matrix k1(n, n), k2(n, n), k3(n, n), k4(n, n), k5(n, n), k6(n, n), k7(n, n);
    Matrix stage(n, n), y_new(n, n), err(n, n);
    model.apply(y, k1);
    ++diag.evaluations;

    double h = solver.initial_step;
    if (!(h > 0.0)) {
        const double d0 = y.norm();
        const double d1 = k1.norm();
        h = (d1 > 1e-14) ? 0.01 * d0 / d1 : 1e-3;
        h = std::clamp(h, 1e-6, 0.1);
    }
    h = std::min(h, solver.max_step);

    double t = 0.0;
    int next_record = 1;
    const int n_records = record.n_records;
    auto record_time = [&](int k) {
        return k == n_records - 1 ? t_final : t_final * k / (n_records - 1);
    };
    bool last_rejected = false;

    while (next_record < n_records) {
        if (diag.accepted_steps + diag.rejected_steps >= solver.max_steps) {
            throw StiffFailure("integrate: step budget exhausted", t);
        }
        const double t_target = record_time(next_record);
        double h_step = std::min(h, t_target - t);
        const bool hits_record = h_step >= t_target - t;
        if (h_step < solver.min_step && !hits_record) {
            throw StiffFailure("integrate: step size underflow at t=" + std::to_string(t), t);
        }

        stage = y + h_step * a21 * k1;
        model.apply(stage, k2);
        stage = y + h_step * (a31 * k1 + a32 * k2);
        model.apply(stage, k3);
        stage = y + h_step * (a41 * k1 + a42 * k2 + a43 * k3);
        model.apply(stage, k4);
        stage = y + h_step * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        model.apply(stage, k5);
        stage = y + h_step * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        model.apply(stage, k6);
        y_new = y + h_step * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        model.apply(y_new, k7);
        diag.evaluations += 6;

        err = h_step * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
        const double en = error_norm(err, y, y_new, solver.atol, solver.rtol);
        if (!std::isfinite(en)) throw StiffFailure("integrate: non-finite error estimate", t);

        if (en <= 1.0) {
            t = hits_record ? t_target : t + h_step;
            // Symmetrize and renormalize, logging what was removed.
            const Matrix herm = 0.5 * (y_new + y_new.adjoint());
            const double herm_fix = fock::max_abs(y_new - herm);
            const double tr = herm.trace().real();
            const double trace_fix = std::abs(tr - 1.0);
            diag.trace_corrections.push_back(trace_fix);
            diag.hermitian_corrections.push_back(herm_fix);
            diag.total_trace_correction += trace_fix;
            diag.step_sizes.push_back(h_step);
            ++diag.accepted_steps;
            if (trace_fix > kAbortCorrection || herm_fix > kAbortCorrection) {
                throw InvariantBreach("integrate: per-step correction exceeded 1e-4", t);
            }
            if (t >= 1.0 && diag.total_trace_correction > kTraceDriftPerTime * t) {
                throw InvariantBreach("integrate: trace drift exceeded 1e-6 per unit time", t);
            }
            y = herm / tr;
            // L commutes with both corrections, so the FSAL stage carries over.
            k1 = (0.5 / tr) * (k7 + k7.adjoint());

            if (hits_record) {
                recorder.record(t, y);
                ++next_record;
            }
            const double factor = en == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(en, -0.2), 0.2, last_rejected ? 1.0 : 5.0);
            // Keep the proposal from an unclipped step when a record time shortened it.
            if (!hits_record || h_step >= h) h = h_step * factor;
            h = std::min(h, solver.max_step);
            last_rejected = false;
        } else {
            ++diag.rejected_steps;
            h = h_step * std::clamp(0.9 * std::pow(en, -0.2), 0.1, 1.0);
            last_rejected = true;
            if (h < solver.min_step) {
                throw StiffFailure("integrate: step size underflow at t=" + std::to_string(t), t);
            }
        }
    }
    out.final_rho = y;
    return out;
}

QuantumState SteadyStateResult::state() const {
    return QuantumState::mixed_unchecked_positivity(rho);
}

double generator_residual(const LindbladModel& model, const Matrix& rho) {
    return model.apply(rho).norm() / rho.norm();
}

SteadyStateResult steady_state(const LindbladModel& model, const QuantumState& rho_guess,
                               const SteadyStateSpec& spec) {
    if (!(spec.tolerance > 0.0)) throw InvalidParameter("steady_state: tolerance must be positive");
    if (!(spec.initial_horizon > 0.0)) throw InvalidParameter("steady_state: horizon must be positive");
    SteadyStateResult current;
    current.rho = rho_guess.density();
    current.residual = generator_residual(model, current.rho);
    SteadyStateResult best = current;
    if (current.residual <= spec.tolerance) return current;

    RecordSpec quiet;
    quiet.n_records = 2;
    double chunk = spec.initial_horizon;
    for (int k = 0; k <= spec.max_doublings; ++k) {
        const TrajectoryRecord rec =
            integrate(model, QuantumState::mixed_unchecked_positivity(current.rho), chunk, spec.solver, quiet);
        current.rho = rec.final_rho;
        current.elapsed_time += chunk;
        current.doublings = k;
        current.residual = generator_residual(model, current.rho);
        if (current.residual < best.residual) best = current;
        if (current.residual <= spec.tolerance) return current;
        chunk *= 2.0;
    }
    throw SteadyStateNotReached("steady_state: residual " + std::to_string(best.residual) +
                                    " above tolerance after " + std::to_string(spec.max_doublings) +
                                    " doublings",
                                best);
}

std::string config_hash(const nlohmann::json& config) {
    const std::string text = config.dump();
    std::array<unsigned char, SHA_DIGEST_LENGTH> digest{};
    SHA1(reinterpret_cast<const unsigned char*>(text.data()), text.size(), digest.data());
    std::ostringstream hex;
    for (unsigned char c : digest) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
    return hex.str();
}

void write_trajectory(const std::string& csv_path, const TrajectoryRecord& record,
                      const nlohmann::json& metadata) {
    static const std::array<const char*, 6> kCanonical{"N", "Z", "X", "Y", "purity", "fidelity"};
    std::vector<std::string> columns(kCanonical.begin(), kCanonical.end());
    for (const auto& [name, values] : record.series) {
        if (std::find(columns.begin(), columns.end(), name) == columns.end()) columns.push_back(name);
    }
    std::ofstream out(csv_path);
    if (!out) throw Error("write_trajectory: cannot open " + csv_path);
    out << std::setprecision(12) << 't';
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    for (std::size_t i = 0; i < record.times.size(); ++i) {
        out << record.times[i];
        for (const auto& c : columns) {
            out << ',';
            if (record.has(c)) {
                out << record.get(c)[i];
            } else {
                out << "nan";
            }
        }
        out << '\n';
    }

    std::string json_path = csv_path;
    const auto dot = json_path.find_last_of('.');
    json_path = (dot == std::string::npos ? json_path : json_path.substr(0, dot)) + ".json";
    nlohmann::json side = {{"metadata", metadata},
                           {"diagnostics", record.diagnostics.summary()},
                           {"config_hash", config_hash(metadata)},
                           {"columns", columns}};
    std::ofstream js(json_path);
    if (!js) throw Error("write_trajectory: cannot open " + json_path);
    js << side.dump(2) << '\n';
}

}  // namespace gridstab::lindblad
