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

#include "gridstab/gkp.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace gridstab::gkp {

namespace {

std::string sci(double v) {
    std::ostringstream os;
    os.precision(3);
    os << std::scientific << v;
    return os.str();
}


using std::numbers::pi;

constexpr double kPureNormTolerance = 1e-10;
constexpr double kTraceTolerance = 1e-8;
constexpr double kHermitianTolerance = 1e-10;
constexpr double kPositivityTolerance = 1e-8;

std::string replace_extension(const std::string& path, const std::string& ext) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) return path + ext;
    return path.substr(0, dot) + ext;
}

Eigen::VectorXd clipped_eigenvalues(const Matrix& h, Matrix* vectors) {
    Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
    if (vectors != nullptr) *vectors = solver.eigenvectors();
    return solver.eigenvalues().cwiseMax(0.0);
}

}  // namespace

GkpParams GkpParams::from_lattice(int d, double epsilon) {
    if (d != 1 && d != 2) throw InvalidParameter("GkpParams: d must be 1 or 2");
    if (!(epsilon > 0.0)) throw InvalidParameter("GkpParams: epsilon must be positive");
    GkpParams out;
    out.d = d;
    out.eta_square = std::sqrt(2.0 * pi * d);
    out.eta = out.eta_square / 2.0;
    out.epsilon = epsilon;
    return out;
}

GkpParams GkpParams::qubit(double epsilon) { return from_lattice(2, epsilon); }
GkpParams GkpParams::qunaught(double epsilon) { return from_lattice(1, epsilon); }

double GkpParams::comb_spacing() const { return d * 2.0 * pi / eta_square; }

QuantumState QuantumState::pure(Vector v) {
    const double norm = v.norm();
    if (std::abs(norm - 1.0) > kPureNormTolerance) {
        throw ContractViolation("QuantumState::pure: vector norm " + sci(norm));
    }
    QuantumState s;
    s.kind_ = Kind::Pure;
    s.dim_ = static_cast<int>(v.size());
    s.vec_ = std::move(v);
    return s;
}

QuantumState QuantumState::normalized(const Vector& v) {
    const double norm = v.norm();
    if (!(norm > 0.0)) throw ContractViolation("QuantumState::normalized: zero vector");
    return pure(v / norm);
}

QuantumState QuantumState::mixed_unchecked_positivity(Matrix rho) {
    if (rho.rows() != rho.cols()) throw ShapeMismatch("QuantumState::mixed: not square");
    const double tr_err = std::abs(rho.trace() - cplx(1.0, 0.0));
    if (tr_err > kTraceTolerance) {
        throw ContractViolation("QuantumState::mixed: trace deviates by " + sci(tr_err));
    }
    const double herm = fock::max_abs(rho - rho.adjoint());
    if (herm > kHermitianTolerance) {
        throw ContractViolation("QuantumState::mixed: not Hermitian, residual " +
                                sci(herm));
    }
    QuantumState s;
    s.kind_ = Kind::Mixed;
    s.dim_ = static_cast<int>(rho.rows());
    s.rho_ = std::move(rho);
    return s;
}

QuantumState QuantumState::mixed(Matrix rho) {
    QuantumState s = mixed_unchecked_positivity(std::move(rho));
    Eigen::SelfAdjointEigenSolver<Matrix> solver(s.rho_, Eigen::EigenvaluesOnly);
    const double min_eig = solver.eigenvalues().minCoeff();
    if (min_eig < -kPositivityTolerance) {
        throw ContractViolation("QuantumState::mixed: negative eigenvalue " +
                                sci(min_eig));
    }
    return s;
}

const Vector& QuantumState::vector() const {
    if (kind_ != Kind::Pure) throw ContractViolation("QuantumState: no state vector for mixed state");
    return vec_;
}

Matrix QuantumState::density() const {
    if (kind_ == Kind::Mixed) return rho_;
    return vec_ * vec_.adjoint();
}

double QuantumState::expectation(const FockOperator& op) const {
    if (op.dim() != dim_) throw ShapeMismatch("expectation: dimension mismatch");
    if (kind_ == Kind::Pure) return vec_.dot(op.matrix() * vec_).real();
    // tr(O rho) without forming the product
    return (op.matrix().transpose().cwiseProduct(rho_)).sum().real();
}

double QuantumState::purity() const {
    if (kind_ == Kind::Pure) return 1.0;
    return rho_.cwiseAbs2().sum();
}

Eigen::MatrixXd hermite_functions(int dim, const std::vector<double>& xs) {
    if (dim < 1) throw InvalidDimension("hermite_functions: dim must be >= 1");
    const auto nx = static_cast<Eigen::Index>(xs.size());
    Eigen::MatrixXd phi(dim, nx);
    const double c0 = std::pow(pi, -0.25);
    for (Eigen::Index j = 0; j < nx; ++j) {
        const double x = xs[static_cast<std::size_t>(j)];
        phi(0, j) = c0 * std::exp(-0.5 * x * x);
        if (dim > 1) phi(1, j) = std::sqrt(2.0) * x * phi(0, j);
        for (int n = 2; n < dim; ++n) {
            phi(n, j) = std::sqrt(2.0 / n) * x * phi(n - 1, j) -
                        std::sqrt((n - 1.0) / n) * phi(n - 2, j);
        }
    }
    return phi;
}

QuantumState build_codeword(int dim, const GkpParams& params, int k, double max_tail_weight) {
    if (dim < 2) throw InvalidDimension("build_codeword: dim must be >= 2");
    if (k < 0 || k >= params.d) throw InvalidParameter("build_codeword: k must lie in 0..d-1");

    // Measure the tail on a longer truncation, then cut back to dim.
    const int ext = dim + std::max(32, dim / 4);
    const double radius = std::sqrt(2.0 * ext) + 4.0;
    const double unit = 2.0 * pi / params.eta_square;
    std::vector<double> peaks;
    const int m_max = static_cast<int>(std::ceil(radius / (unit * params.d))) + 1;
    for (int m = -m_max; m <= m_max; ++m) {
        const double x = (m * params.d + k) * unit;
        if (std::abs(x) <= radius) peaks.push_back(x);
    }
    const Eigen::MatrixXd phi = hermite_functions(ext, peaks);
    Eigen::VectorXd c = phi.rowwise().sum();
    for (int n = 0; n < ext; ++n) c(n) *= std::exp(-params.epsilon * (n + 0.5));

    const double total = c.squaredNorm();
    const double tail = c.tail(ext - dim).squaredNorm() / total;
    if (tail > max_tail_weight) {
        throw TruncationError("build_codeword: dim " + std::to_string(dim) +
                                  " drops Fock tail weight " + sci(tail),
                              tail);
    }
    return QuantumState::normalized(c.head(dim).cast<cplx>());
}

QuantumState apply_regularizer(const QuantumState& state, double epsilon) {
    if (!(epsilon >= 0.0)) throw InvalidParameter("apply_regularizer: epsilon must be >= 0");
    Vector v = state.vector();
    for (Eigen::Index n = 0; n < v.size(); ++n) v(n) *= std::exp(-epsilon * (n + 0.5));
    return QuantumState::normalized(v);
}

LogicalLabel parse_logical_label(const std::string& text) {
    if (text == "+Z") return LogicalLabel::PlusZ;
    if (text == "-Z") return LogicalLabel::MinusZ;
    if (text == "+X") return LogicalLabel::PlusX;
    if (text == "-X") return LogicalLabel::MinusX;
    if (text == "+Y") return LogicalLabel::PlusY;
    if (text == "-Y") return LogicalLabel::MinusY;
    if (text == "magic") return LogicalLabel::Magic;
    throw InvalidParameter("unknown logical label '" + text + "'");
}

std::string to_string(LogicalLabel label) {
    switch (label) {
        case LogicalLabel::PlusZ: return "+Z";
        case LogicalLabel::MinusZ: return "-Z";
        case LogicalLabel::PlusX: return "+X";
        case LogicalLabel::MinusX: return "-X";
        case LogicalLabel::PlusY: return "+Y";
        case LogicalLabel::MinusY: return "-Y";
        case LogicalLabel::Magic: return "magic";
    }
    return "?";
}

QuantumState build_logical_state(int dim, const GkpParams& params, LogicalLabel label) {
    if (params.d == 1) {
        if (label != LogicalLabel::PlusZ) {
            throw InvalidParameter("build_logical_state: a qunaught has a single codeword");
        }
        return build_codeword(dim, params, 0);
    }
    const Vector zero = build_codeword(dim, params, 0).vector();
    const Vector one = build_codeword(dim, params, 1).vector();
    const cplx i(0.0, 1.0);
    switch (label) {
        case LogicalLabel::PlusZ: return QuantumState::pure(zero);
        case LogicalLabel::MinusZ: return QuantumState::pure(one);
        case LogicalLabel::PlusX: return QuantumState::normalized(zero + one);
        case LogicalLabel::MinusX: return QuantumState::normalized(zero - one);
        case LogicalLabel::PlusY: return QuantumState::normalized(zero + i * one);
        case LogicalLabel::MinusY: return QuantumState::normalized(zero - i * one);
        case LogicalLabel::Magic:
            return QuantumState::normalized(std::cos(pi / 8) * zero + std::sin(pi / 8) * one);
    }
    throw InvalidParameter("build_logical_state: bad label");
}

LogicalFrame build_logical_frame(const Oscillator& osc, const GkpParams& params) {
    if (params.d != 2) throw InvalidParameter("build_logical_frame: requires d = 2");
    const double eta = params.eta;
    auto sign_cos = [eta](double x) { return std::cos(eta * x) >= 0.0 ? 1.0 : -1.0; };
    LogicalFrame frame;
    frame.z = osc.of_q(sign_cos);
    frame.x = osc.of_p(sign_cos);
    const Matrix raw = cplx(0.0, -1.0) * (frame.z.matrix() * frame.x.matrix());
    const Matrix herm = 0.5 * (raw + raw.adjoint());
    frame.y_antihermitian_residue = fock::max_abs(raw - herm);
    frame.y = FockOperator(herm, FockOperator::Hermiticity::Hermitian);
    return frame;
}

LogicalFrame build_logical_frame(int dim, const GkpParams& params) {
    return build_logical_frame(Oscillator(dim), params);
}

double fidelity(const QuantumState& rho, const QuantumState& target) {
    if (!target.is_pure()) {
        throw ContractViolation("fidelity: mixed targets are not supported");
    }
    if (rho.dim() != target.dim()) throw ShapeMismatch("fidelity: dimension mismatch");
    const Vector& t = target.vector();
    if (rho.is_pure()) return std::norm(t.dot(rho.vector()));
    return t.dot(rho.density() * t).real();
}

double uhlmann_fidelity(const QuantumState& rho, const QuantumState& sigma) {
    if (rho.dim() != sigma.dim()) throw ShapeMismatch("uhlmann_fidelity: dimension mismatch");
    if (rho.is_pure()) return fidelity(sigma, rho);
    if (sigma.is_pure()) return fidelity(rho, sigma);
    Matrix u;
    const Eigen::VectorXd lam = clipped_eigenvalues(rho.density(), &u);
    const Matrix sqrt_rho = u * lam.cwiseSqrt().cast<cplx>().asDiagonal() * u.adjoint();
    const Matrix inner = sqrt_rho * sigma.density() * sqrt_rho;
    Eigen::VectorXd mu = clipped_eigenvalues(0.5 * (inner + inner.adjoint()), nullptr);
    // round-off eigenvalues would otherwise contribute ~sqrt(1e-16) each
    const double floor = 1e-13 * mu.maxCoeff();
    for (auto& m : mu) if (m < floor) m = 0.0;
    const double root = mu.cwiseSqrt().sum();
    return root * root;
}

QuantumState fock_state(int dim, int n) {
    if (n < 0 || n >= dim) throw InvalidParameter("fock_state: level outside truncation");
    Vector v = Vector::Zero(dim);
    v(n) = 1.0;
    return QuantumState::pure(std::move(v));
}

QuantumState coherent_state(int dim, cplx alpha) {
    if (dim < 1) throw InvalidDimension("coherent_state: dim must be >= 1");
    Vector v(dim);
    v(0) = std::exp(-0.5 * std::norm(alpha));
    for (int n = 1; n < dim; ++n) v(n) = v(n - 1) * alpha / std::sqrt(static_cast<double>(n));
    return QuantumState::normalized(v);
}

QuantumState translate_q(const Oscillator& osc, const QuantumState& state, double shift) {
    const FockOperator shift_op =
        osc.of_p_complex([shift](double p) { return std::polar(1.0, -shift * p); });
    if (state.is_pure()) return QuantumState::normalized(shift_op.matrix() * state.vector());
    const Matrix rho = shift_op.matrix() * state.density() * shift_op.matrix().adjoint();
    return QuantumState::mixed_unchecked_positivity(0.5 * (rho + rho.adjoint()));
}

std::vector<double> position_density(const QuantumState& state, const std::vector<double>& xs) {
    const Eigen::MatrixXd phi = hermite_functions(state.dim(), xs);
    std::vector<double> out(xs.size());
    if (state.is_pure()) {
        const Vector amp = phi.transpose().cast<cplx>() * state.vector();
        for (std::size_t j = 0; j < xs.size(); ++j) out[j] = std::norm(amp(static_cast<Eigen::Index>(j)));
    } else {
        const Matrix phic = phi.cast<cplx>();
        const Matrix t = state.density() * phic;
        for (std::size_t j = 0; j < xs.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            out[j] = phic.col(jj).dot(t.col(jj)).real();
        }
    }
    return out;
}

std::vector<double> local_maxima(const std::vector<double>& xs, const std::vector<double>& ys,
                                 double rel_height) {
    if (xs.size() != ys.size()) throw ShapeMismatch("local_maxima: length mismatch");
    std::vector<double> out;
    if (ys.size() < 3) return out;
    const double top = *std::max_element(ys.begin(), ys.end());
    for (std::size_t i = 1; i + 1 < ys.size(); ++i) {
        if (ys[i] > ys[i - 1] && ys[i] >= ys[i + 1] && ys[i] >= rel_height * top) {
            // Parabolic refinement through the three samples.
            const double denom = ys[i - 1] - 2.0 * ys[i] + ys[i + 1];
            double offset = 0.0;
            if (denom < 0.0) offset = 0.5 * (ys[i - 1] - ys[i + 1]) / denom;
            out.push_back(xs[i] + offset * (xs[i + 1] - xs[i]));
        }
    }
    return out;
}

PhaseGrid PhaseGrid::square(double half_width, int n) {
    return PhaseGrid{-half_width, half_width, n, -half_width, half_width, n};
}

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
    if (n < 1) throw InvalidParameter("PhaseGrid: need at least one point per axis");
    std::vector<double> out(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return out;
}

double trapezoid(const std::vector<double>& ys, double h) {
    if (ys.size() < 2) return 0.0;
    double s = 0.5 * (ys.front() + ys.back());
    for (std::size_t i = 1; i + 1 < ys.size(); ++i) s += ys[i];
    return s * h;
}

}  // namespace

std::vector<double> PhaseGrid::xs() const { return linspace(x_min, x_max, nx); }
std::vector<double> PhaseGrid::ps() const { return linspace(p_min, p_max, np); }

std::vector<double> WignerMap::x_marginal() const {
    const double dp = p.size() > 1 ? p[1] - p[0] : 0.0;
    std::vector<double> out(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        std::vector<double> col(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) col[i] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out[j] = trapezoid(col, dp);
    }
    return out;
}

std::vector<double> WignerMap::p_marginal() const {
    const double dx = x.size() > 1 ? x[1] - x[0] : 0.0;
    std::vector<double> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        std::vector<double> row(x.size());
        for (std::size_t j = 0; j < x.size(); ++j) row[j] = values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        out[i] = trapezoid(row, dx);
    }
    return out;
}

WignerMap wigner(const QuantumState& state, const PhaseGrid& grid) {
    WignerMap map;
    map.dim = state.dim();
    map.x = grid.xs();
    map.p = grid.ps();
    map.validity_extent = std::sqrt(2.0 * state.dim()) + 2.0;
    const double extent = std::max({std::abs(grid.x_min), std::abs(grid.x_max),
                                    std::abs(grid.p_min), std::abs(grid.p_max)});
    map.exceeds_validity = extent > map.validity_extent;

    // Fine position grid aligned with the output x samples so that x +- y
    // falls on grid nodes; its spacing resolves the fastest Hermite mode.
    constexpr double kTargetSpacing = 0.04;
    const double dx = grid.nx > 1 ? (grid.x_max - grid.x_min) / (grid.nx - 1) : kTargetSpacing;
    const int refine = std::max(1, static_cast<int>(std::ceil(dx / kTargetSpacing)));
    const double h = dx / refine;
    const double support = std::sqrt(2.0 * state.dim()) + 6.0;
    const int j_lo = static_cast<int>(std::floor((-support - grid.x_min) / h));
    const int j_hi = static_cast<int>(std::ceil((support - grid.x_min) / h));
    const int n_fine = j_hi - j_lo + 1;
    std::vector<double> fine(static_cast<std::size_t>(n_fine));
    for (int j = 0; j < n_fine; ++j) fine[static_cast<std::size_t>(j)] = grid.x_min + (j + j_lo) * h;

    const Matrix phi = hermite_functions(state.dim(), fine).cast<cplx>();
    const Matrix kernel = phi.transpose() * state.density() * phi;  // <x_a|rho|x_b>

    const int half = n_fine;  // max offset |m| that can stay on the grid
    const int n_off = 2 * half + 1;
    // offsets(ix, m + half) = <x+y_m|rho|x-y_m>
    Matrix offsets = Matrix::Zero(grid.nx, n_off);
    for (int ix = 0; ix < grid.nx; ++ix) {
        const int centre = ix * refine - j_lo;
        for (int m = -half; m <= half; ++m) {
            const int a = centre + m;
            const int b = centre - m;
            if (a < 0 || b < 0 || a >= n_fine || b >= n_fine) continue;
            offsets(ix, m + half) = kernel(a, b);
        }
    }
    Matrix phases(n_off, grid.np);
    for (int m = -half; m <= half; ++m) {
        for (int ip = 0; ip < grid.np; ++ip) {
            phases(m + half, ip) = std::polar(1.0, -2.0 * map.p[static_cast<std::size_t>(ip)] * m * h);
        }
    }
    const Matrix w = offsets * phases;  // nx x np
    map.values = (w.real().transpose()) * (h / pi);

    map.normalization = trapezoid(map.x_marginal(), dx);
    return map;
}

void write_wigner_csv(const std::string& path, const WignerMap& map, const WignerMetadata& meta) {
    std::ofstream out(path);
    if (!out) throw Error("write_wigner_csv: cannot open " + path);
    out.precision(10);
    out << "p\\x";
    for (double x : map.x) out << ',' << x;
    out << '\n';
    for (std::size_t i = 0; i < map.p.size(); ++i) {
        out << map.p[i];
        for (std::size_t j = 0; j < map.x.size(); ++j) {
            out << ',' << map.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        }
        out << '\n';
    }
    nlohmann::json side = {
        {"dim", map.dim},
        {"epsilon", meta.epsilon},
        {"eta", meta.eta},
        {"label", meta.label},
        {"x_range", {map.x.front(), map.x.back(), map.x.size()}},
        {"p_range", {map.p.front(), map.p.back(), map.p.size()}},
        {"normalization", map.normalization},
        {"validity_extent", map.validity_extent},
        {"exceeds_validity", map.exceeds_validity},
    };
    std::ofstream js(replace_extension(path, ".json"));
    if (!js) throw Error("write_wigner_csv: cannot open sidecar for " + path);
    js << side.dump(2) << '\n';
}

}  // namespace gridstab::gkp
