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

#include "gridstab/fock.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gridstab::fock {

namespace {

constexpr double kHermitianTagTolerance = 1e-12;

void require_same_dim(const FockOperator& a, const FockOperator& b, const char* where) {
    if (a.dim() != b.dim()) {
        throw ShapeMismatch(std::string(where) + ": dimension " + std::to_string(a.dim()) +
                            " vs " + std::to_string(b.dim()));
    }
}

void require_positive(double value, const char* name) {
    if (!(value > 0.0) || !std::isfinite(value)) {
        throw InvalidParameter(std::string(name) + " must be positive and finite");
    }
}

void require_non_negative(double value, const char* name) {
    if (!(value >= 0.0) || !std::isfinite(value)) {
        throw InvalidParameter(std::string(name) + " must be non-negative and finite");
    }
}

}  // namespace

double max_abs(const Matrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_residual(const Matrix& m) {
    const double scale = max_abs(m);
    if (scale == 0.0) return 0.0;
    return max_abs(m - m.adjoint()) / scale;
}

FockOperator::FockOperator(Matrix entries, Hermiticity tag) : entries_(std::move(entries)) {
    if (entries_.rows() != entries_.cols()) {
        throw ShapeMismatch("FockOperator: matrix must be square");
    }
    if (tag == Hermiticity::Hermitian) {
        const double r = hermiticity_residual(entries_);
        if (r > kHermitianTagTolerance) {
            throw ContractViolation("FockOperator: Hermitian tag rejected, residual " +
                                    std::to_string(r));
        }
        hermitian_ = true;
    }
}

FockOperator FockOperator::symmetrized(const Matrix& m, double tolerance) {
    const double r = hermiticity_residual(m);
    if (r > tolerance) {
        throw ContractViolation("symmetrized: input not Hermitian, residual " + std::to_string(r));
    }
    Matrix h = 0.5 * (m + m.adjoint());
    return FockOperator(std::move(h), Hermiticity::Hermitian);
}

FockOperator FockOperator::identity(int dim) {
    if (dim < 1) throw InvalidDimension("identity: dim must be >= 1");
    return FockOperator(Matrix::Identity(dim, dim), Hermiticity::Hermitian);
}

FockOperator FockOperator::zero(int dim) {
    if (dim < 1) throw InvalidDimension("zero: dim must be >= 1");
    return FockOperator(Matrix::Zero(dim, dim), Hermiticity::Hermitian);
}

FockOperator FockOperator::adjoint() const {
    FockOperator out;
    out.entries_ = entries_.adjoint();
    out.hermitian_ = hermitian_;
    return out;
}

FockOperator FockOperator::as_hermitian() const {
    return FockOperator(entries_, Hermiticity::Hermitian);
}

FockOperator operator+(const FockOperator& a, const FockOperator& b) {
    require_same_dim(a, b, "operator+");
    return FockOperator(a.entries_ + b.entries_);
}

FockOperator operator-(const FockOperator& a, const FockOperator& b) {
    require_same_dim(a, b, "operator-");
    return FockOperator(a.entries_ - b.entries_);
}

FockOperator operator*(const FockOperator& a, const FockOperator& b) {
    require_same_dim(a, b, "operator*");
    Matrix m(a.dim(), a.dim());
    m.noalias() = a.entries_ * b.entries_;
    return FockOperator(std::move(m));
}

FockOperator operator*(cplx s, const FockOperator& a) { return FockOperator(s * a.entries_); }

FockOperator operator*(double s, const FockOperator& a) {
    FockOperator out;
    out.entries_ = s * a.entries_;
    out.hermitian_ = a.hermitian_;
    return out;
}

FockOperator commutator(const FockOperator& a, const FockOperator& b) { return a * b - b * a; }

InteriorProjector::InteriorProjector(int dim, int cutoff) : dim_(dim), cutoff_(cutoff) {
    if (!(cutoff > 0 && cutoff < dim)) {
        throw InvalidParameter("InteriorProjector: need 0 < cutoff < dim, got cutoff " +
                               std::to_string(cutoff) + " for dim " + std::to_string(dim));
    }
}

InteriorProjector InteriorProjector::fraction(int dim, double fraction) {
    const int cutoff = std::clamp(static_cast<int>(std::floor(fraction * dim)), 1, dim - 1);
    return {dim, cutoff};
}

Matrix InteriorProjector::restrict(const Matrix& m) const {
    if (m.rows() != dim_ || m.cols() != dim_) {
        throw ShapeMismatch("InteriorProjector: operator dimension does not match");
    }
    return m.topLeftCorner(cutoff_, cutoff_);
}

Matrix InteriorProjector::restrict(const FockOperator& op) const { return restrict(op.matrix()); }

double InteriorProjector::max_abs(const Matrix& m) const { return fock::max_abs(restrict(m)); }

SpectralDecomposition::SpectralDecomposition(const FockOperator& op) {
    if (!op.hermitian()) {
        throw ContractViolation("spectral calculus requires a Hermitian-tagged operator");
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(op.matrix());
    if (solver.info() != Eigen::Success) {
        throw Error("SpectralDecomposition: eigensolver failed");
    }
    eigenvalues_ = solver.eigenvalues();
    eigenvectors_ = solver.eigenvectors();
}

FockOperator SpectralDecomposition::apply(const std::function<double(double)>& f) const {
    Eigen::VectorXd fl(eigenvalues_.size());
    for (Eigen::Index i = 0; i < fl.size(); ++i) fl(i) = f(eigenvalues_(i));
    Matrix scaled = eigenvectors_ * fl.asDiagonal();
    Matrix m(dim(), dim());
    m.noalias() = scaled * eigenvectors_.adjoint();
    // Remove the O(1e-16) anti-Hermitian rounding so the tag check is exact.
    return FockOperator(0.5 * (m + m.adjoint()), FockOperator::Hermiticity::Hermitian);
}

FockOperator SpectralDecomposition::apply_complex(const std::function<cplx(double)>& f) const {
    Vector fl(eigenvalues_.size());
    for (Eigen::Index i = 0; i < fl.size(); ++i) fl(i) = f(eigenvalues_(i));
    Matrix scaled = eigenvectors_ * fl.asDiagonal();
    Matrix m(dim(), dim());
    m.noalias() = scaled * eigenvectors_.adjoint();
    return FockOperator(std::move(m));
}

FockOperator spectral_function(const FockOperator& op, const std::function<double(double)>& f) {
    return SpectralDecomposition(op).apply(f);
}

FockOperator spectral_function_complex(const FockOperator& op,
                                       const std::function<cplx(double)>& f) {
    return SpectralDecomposition(op).apply_complex(f);
}

FockOperator build_ladder(int dim) {
    if (dim < 1) throw InvalidDimension("build_ladder: dim must be >= 1");
    Matrix a = Matrix::Zero(dim, dim);
    for (int n = 1; n < dim; ++n) a(n - 1, n) = std::sqrt(static_cast<double>(n));
    return FockOperator(std::move(a));
}

Quadratures build_quadratures(int dim) {
    if (dim < 2) throw InvalidDimension("build_quadratures: dim must be >= 2");
    const Matrix a = build_ladder(dim).matrix();
    const Matrix ad = a.adjoint();
    const double s = 1.0 / std::sqrt(2.0);
    Matrix q = s * (a + ad);
    Matrix p = (s / cplx(0.0, 1.0)) * (a - ad);
    return {FockOperator(std::move(q), FockOperator::Hermiticity::Hermitian),
            FockOperator(std::move(p), FockOperator::Hermiticity::Hermitian)};
}

namespace {

FockOperator number_operator(int dim) {
    Matrix n = Matrix::Zero(dim, dim);
    for (int k = 0; k < dim; ++k) n(k, k) = static_cast<double>(k);
    return FockOperator(std::move(n), FockOperator::Hermiticity::Hermitian);
}

}  // namespace

Oscillator::Oscillator(int dim)
    : dim_(dim),
      a_(build_ladder(dim)),
      quad_(build_quadratures(dim)),
      number_(number_operator(dim)),
      q_spec_(quad_.q),
      p_spec_(quad_.p) {}

TwoDissipators build_two_dissipators(const Oscillator& osc, double eta, double epsilon) {
    require_positive(eta, "eta");
    require_non_negative(epsilon, "epsilon");
    const cplx ie(0.0, epsilon);
    const FockOperator sin_q = osc.of_q([eta](double x) { return std::sin(eta * x); });
    const FockOperator sin_p = osc.of_p([eta](double x) { return std::sin(eta * x); });
    if (epsilon == 0.0) return {sin_q, sin_p};
    const FockOperator cos_q = osc.of_q([eta](double x) { return std::cos(eta * x); });
    const FockOperator cos_p = osc.of_p([eta](double x) { return std::cos(eta * x); });
    return {sin_q + ie * (cos_q * osc.p()), sin_p - ie * (cos_p * osc.q())};
}

TwoDissipators build_two_dissipators(int dim, double eta, double epsilon) {
    return build_two_dissipators(Oscillator(dim), eta, epsilon);
}

std::vector<FockOperator> build_four_dissipators(const Oscillator& osc, double eta_square,
                                                 double epsilon) {
    require_positive(eta_square, "eta_square");
    require_non_negative(epsilon, "epsilon");
    const double e = eta_square;
    const cplx ie(0.0, epsilon);
    const FockOperator sin_q = osc.of_q([e](double x) { return std::sin(e * x); });
    const FockOperator cos_q = osc.of_q([e](double x) { return std::cos(e * x); });
    const FockOperator sin_p = osc.of_p([e](double x) { return std::sin(e * x); });
    const FockOperator cos_p = osc.of_p([e](double x) { return std::cos(e * x); });
    const FockOperator shift = std::exp(epsilon * e / 2.0) * osc.identity();

    std::vector<FockOperator> out;
    out.reserve(4);
    out.push_back(sin_q + ie * (cos_q * osc.p()));
    out.push_back(sin_p - ie * (cos_p * osc.q()));
    out.push_back(cos_q - ie * (sin_q * osc.p()) - shift);
    out.push_back(cos_p + ie * (sin_p * osc.q()) - shift);
    return out;
}

std::vector<FockOperator> build_four_dissipators(int dim, double eta_square, double epsilon) {
    return build_four_dissipators(Oscillator(dim), eta_square, epsilon);
}

FockOperator channel_adjoint_term(const FockOperator& m, const FockOperator& o) {
    require_same_dim(m, o, "channel_adjoint_term");
    if (!o.hermitian()) {
        throw ContractViolation("channel_adjoint_term: observable must be Hermitian");
    }
    const Matrix& M = m.matrix();
    const Matrix& O = o.matrix();
    Matrix comm = O * M - M * O;
    Matrix half(M.rows(), M.cols());
    half.noalias() = 0.5 * (M.adjoint() * comm);
    Matrix out = half + half.adjoint();
    return FockOperator(std::move(out), FockOperator::Hermiticity::Hermitian);
}

}  // namespace gridstab::fock
