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

#include "gridstab/reduced.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace gridstab::reduced {

using std::numbers::pi;

namespace {

void check_sigma(double sigma) {
    if (!(sigma > 0.0 && sigma < 2.0)) {
        std::ostringstream os;
        os << "sigma must lie in (0, 2), got " << sigma;
        throw InvalidParameter(os.str());
    }
}

template <class F>
double integrate(F f, double a, double b) {
    return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-13);
}

}  // namespace

ReducedParams ReducedParams::from_sigma(double sigma) {
    check_sigma(sigma);
    ReducedParams p;
    p.sigma = sigma;
    return p;
}

ReducedParams ReducedParams::from_physical(double epsilon, double eta) {
    if (!(epsilon > 0.0) || !(eta > 0.0)) throw InvalidParameter("epsilon and eta must be positive");
    const double x = 2.0 * epsilon * eta;
    ReducedParams p = from_sigma(x / (1.0 + x));
    p.epsilon = epsilon;
    p.eta = eta;
    return p;
}

double generator_sigma(double epsilon, double eta) {
    const double x = epsilon * eta;
    return x / (1.0 + x);
}

double weight(double sigma, double theta) {
    return std::pow(1.0 + std::cos(theta), 1.0 / sigma - 1.0);
}

double weight2(double sigma, double theta) {
    return std::pow(1.0 + std::cos(theta), 1.0 / sigma);
}

double SpectralProblem::symmetry_residual() const {
    return std::max((stiffness - stiffness.transpose()).cwiseAbs().maxCoeff(),
                    (mass - mass.transpose()).cwiseAbs().maxCoeff());
}

Eigen::VectorXd SpectralProblem::constant_coefficients() const {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(basis_size());
    c(0) = 1.0;
    return c;
}

Eigen::VectorXd SpectralProblem::values(const Eigen::VectorXd& coefficients) const {
    return basis.transpose() * coefficients;
}

double SpectralProblem::rayleigh_quotient(const Eigen::VectorXd& c) const {
    return c.dot(stiffness * c) / c.dot(mass * c);
}

double SpectralProblem::weighted_integral(const Eigen::VectorXd& c) const {
    return mass.row(0).dot(c);
}

SpectralProblem build_problem(const ReducedParams& params, int n_grid) {
    check_sigma(params.sigma);
    if (n_grid < 64 || n_grid % 2 != 0) throw InvalidDimension("n_grid must be even and >= 64");
    SpectralProblem pr;
    pr.params = params;
    pr.n_grid = n_grid;
    pr.modes = n_grid / 8;
    if (params.sigma >= 1.0) pr.warning = "sigma >= 1: weight w is singular at theta = pi";

    const double sigma = params.sigma;
    const double h = 2.0 * pi / n_grid;
    pr.theta.resize(n_grid);
    pr.w.resize(n_grid);
    pr.w2.resize(n_grid);
    for (int j = 0; j < n_grid; ++j) {
        const double t = -pi + (j + 0.5) * h;
        pr.theta(j) = t;
        pr.w(j) = weight(sigma, t);
        pr.w2(j) = weight2(sigma, t);
    }

    const int k_max = pr.modes;
    const int nb = 1 + 2 * k_max + (k_max + 1);
    pr.basis.resize(nb, n_grid);
    pr.basis_derivative.resize(nb, n_grid);
    for (int j = 0; j < n_grid; ++j) {
        const double t = pr.theta(j);
        int r = 0;
        pr.basis(r, j) = 1.0;
        pr.basis_derivative(r++, j) = 0.0;
        for (int k = 1; k <= k_max; ++k) {
            pr.basis(r, j) = std::cos(k * t);
            pr.basis_derivative(r++, j) = -k * std::sin(k * t);
            pr.basis(r, j) = std::sin(k * t);
            pr.basis_derivative(r++, j) = k * std::cos(k * t);
        }
        for (int k = 0; k <= k_max; ++k) {
            const double f = k + 0.5;
            pr.basis(r, j) = std::sin(f * t);
            pr.basis_derivative(r++, j) = f * std::cos(f * t);
        }
    }

    const Eigen::MatrixXd bw = pr.basis * (h * pr.w).asDiagonal();
    const Eigen::MatrixXd dw = pr.basis_derivative * (sigma * h * pr.w2).asDiagonal();
    pr.mass = bw * pr.basis.transpose();
    pr.stiffness = dw * pr.basis_derivative.transpose();
    pr.mass = 0.5 * (pr.mass + pr.mass.transpose()).eval();
    pr.stiffness = 0.5 * (pr.stiffness + pr.stiffness.transpose()).eval();

    // The half-integer sines are nearly spanned by the periodic modes, so the
    // mass matrix is numerically singular. Solve on its well-conditioned range.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> me(pr.mass);
    const Eigen::VectorXd& mv = me.eigenvalues();
    const double floor = 1e-13 * mv.maxCoeff();
    std::vector<int> keep;
    for (int i = 0; i < mv.size(); ++i)
        if (mv(i) > floor) keep.push_back(i);
    pr.retained = static_cast<int>(keep.size());
    Eigen::MatrixXd t(nb, pr.retained);
    for (int c = 0; c < pr.retained; ++c) t.col(c) = me.eigenvectors().col(keep[c]) / std::sqrt(mv(keep[c]));
    Eigen::MatrixXd reduced = t.transpose() * pr.stiffness * t;
    reduced = 0.5 * (reduced + reduced.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> se(reduced);
    pr.eigenvalues = se.eigenvalues();
    pr.eigenvectors = t * se.eigenvectors();
    return pr;
}

double spectral_gap(const SpectralProblem& problem) {
    if (problem.eigenvalues.size() < 2) throw ContractViolation("spectral_gap: problem has fewer than two modes");
    return problem.eigenvalues(1);
}

GapStudy converged_gap(const ReducedParams& params, int n_grid, double rel_tol, int max_doublings) {
    GapStudy st;
    st.sigma = params.sigma;
    double prev = spectral_gap(build_problem(params, n_grid));
    st.history.emplace_back(n_grid, prev);
    for (int k = 0; k < max_doublings; ++k) {
        n_grid *= 2;
        const double cur = spectral_gap(build_problem(params, n_grid));
        st.history.emplace_back(n_grid, cur);
        st.relative_change = std::abs(cur - prev) / std::abs(cur);
        st.lambda1 = cur;
        st.n_grid = n_grid;
        if (st.relative_change <= rel_tol) {
            st.converged = true;
            return st;
        }
        prev = cur;
    }
    std::ostringstream os;
    os << "spectral gap at sigma=" << params.sigma << " not converged:";
    for (const auto& [n, v] : st.history) os << " " << n << ":" << v;
    throw RefinementFailure(os.str(), st);
}

double predicted_rate(double epsilon, double eta, double lambda1) {
    const double x = epsilon * eta;
    return x * (1.0 + 2.0 * x) * lambda1;
}

double hardy_constant(double sigma) {
    return 16.0 * sigma * sigma / ((2.0 - sigma) * (2.0 - sigma));
}

HardySides hardy_sides(double sigma, HardySide side, const std::function<double(double)>& g,
                       const std::function<double(double)>& dg) {
    check_sigma(sigma);
    const double a = side == HardySide::Plus ? pi : 0.5 * pi;
    const double b = side == HardySide::Plus ? 1.5 * pi : pi;
    HardySides s;
    s.lhs = integrate([&](double t) { const double v = g(t); return weight(sigma, t) * v * v; }, a, b);
    s.rhs = integrate([&](double t) { const double v = dg(t); return weight2(sigma, t) * v * v; }, a, b);
    return s;
}

HardyReport verify_hardy(const ReducedParams& params, int n_test, std::uint64_t seed) {
    check_sigma(params.sigma);
    HardyReport rep;
    rep.sigma = params.sigma;
    rep.constant = hardy_constant(params.sigma);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    constexpr double half_pi = 0.5 * pi;

    for (HardySide side : {HardySide::Plus, HardySide::Minus}) {
        // s = |theta - pi| / (pi/2); outer endpoint at s = 1 where g vanishes
        const double dir = side == HardySide::Plus ? 1.0 : -1.0;
        for (int n = 0; n < n_test; ++n) {
            std::vector<double> c(7);
            for (auto& x : c) x = coef(rng);
            auto poly = [&c](double s) {
                double v = 0.0;
                for (auto it = c.rbegin(); it != c.rend(); ++it) v = v * s + *it;
                return v;
            };
            auto dpoly = [&c](double s) {
                double v = 0.0;
                for (int k = static_cast<int>(c.size()) - 1; k >= 1; --k) v = v * s + k * c[k];
                return v;
            };
            auto g = [&](double t) {
                const double s = dir * (t - pi) / half_pi;
                return (1.0 - s) * half_pi * poly(s);
            };
            auto dg = [&](double t) {
                const double s = dir * (t - pi) / half_pi;
                return dir * (-poly(s) + (1.0 - s) * dpoly(s));
            };
            const HardySides hs = hardy_sides(params.sigma, side, g, dg);
            const double bound = rep.constant * hs.rhs;
            if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, hs.lhs / bound);
            if (hs.lhs - bound > 1e-8 * std::max(1.0, hs.lhs)) rep.violations.push_back({side, c, hs.lhs, bound});
            ++rep.tests;
        }
    }
    return rep;
}

WeightBounds weight_bounds_on_i2(double sigma) {
    check_sigma(sigma);
    WeightBounds b{std::numeric_limits<double>::infinity(), 0.0, std::numeric_limits<double>::infinity(), 0.0};
    constexpr int n = 2001;
    for (int i = 0; i < n; ++i) {
        // [-pi/2, pi/2] is I2 shifted by 2pi
        const double t = -0.5 * pi + pi * i / (n - 1);
        const double w = weight(sigma, t), w2 = weight2(sigma, t);
        b.w_min = std::min(b.w_min, w);
        b.w_max = std::max(b.w_max, w);
        b.w2_min = std::min(b.w2_min, w2);
        b.w2_max = std::max(b.w2_max, w2);
    }
    return b;
}

double weighted_mean(double sigma, const std::function<double(double)>& f) {
    check_sigma(sigma);
    const auto fw = [&](double t) { return f(t) * weight(sigma, t); };
    const auto ww = [&](double t) { return weight(sigma, t); };
    const double num = integrate(fw, -pi, 0.0) + integrate(fw, 0.0, pi);
    const double den = integrate(ww, -pi, 0.0) + integrate(ww, 0.0, pi);
    return num / den;
}

void write_gap_table(const std::string& path, const std::vector<GapRow>& rows) {
    std::ofstream out(path);
    if (!out) throw InvalidParameter("cannot open " + path);
    out.precision(12);
    out << "sigma,lambda1,gamma,n_grid,converged\n";
    for (const auto& r : rows) {
        out << r.sigma << ',' << r.lambda1 << ',';
        if (std::isnan(r.gamma)) out << "nan";
        else out << r.gamma;
        out << ',' << r.n_grid << ',' << (r.converged ? "true" : "false") << '\n';
    }
}

}  // namespace gridstab::reduced
