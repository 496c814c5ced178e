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

#pragma once

#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gridstab/errors.hpp"

namespace gridstab {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

namespace fock {

/// Max entrywise modulus.
double max_abs(const Matrix& m);

/// max|m - m^dagger| relative to max|m| (0 for the zero matrix).
double hermiticity_residual(const Matrix& m);

/// Dense operator on a truncated Fock space of dimension dim().
///
/// The Hermitian tag is never taken on trust: constructing with
/// Hermiticity::Hermitian checks the matrix against 1e-12 relative to its
/// largest entry and throws ContractViolation otherwise. Operators are
/// immutable after construction.
class FockOperator {
public:
    enum class Hermiticity { General, Hermitian };

    FockOperator() = default;
    explicit FockOperator(Matrix entries, Hermiticity tag = Hermiticity::General);

    /// Tags as Hermitian after symmetrizing (m + m^dagger)/2; the input must
    /// already be Hermitian to within `tolerance` (relative).
    static FockOperator symmetrized(const Matrix& m, double tolerance = 1e-8);
    static FockOperator identity(int dim);
    static FockOperator zero(int dim);

    int dim() const noexcept { return static_cast<int>(entries_.rows()); }
    const Matrix& matrix() const noexcept { return entries_; }
    bool hermitian() const noexcept { return hermitian_; }
    cplx operator()(int row, int col) const { return entries_(row, col); }

    FockOperator adjoint() const;
    cplx trace() const { return entries_.trace(); }

    /// Retags an operator known to be Hermitian (checked, throws if not).
    FockOperator as_hermitian() const;

    friend FockOperator operator+(const FockOperator& a, const FockOperator& b);
    friend FockOperator operator-(const FockOperator& a, const FockOperator& b);
    friend FockOperator operator*(const FockOperator& a, const FockOperator& b);
    friend FockOperator operator*(cplx s, const FockOperator& a);
    friend FockOperator operator*(double s, const FockOperator& a);

private:
    Matrix entries_;
    bool hermitian_ = false;
};

/// Commutator [a, b].
FockOperator commutator(const FockOperator& a, const FockOperator& b);

/// Interior Fock levels 0..cutoff-1, used to keep truncation-edge artifacts
/// out of identity checks.
class InteriorProjector {
public:
    InteriorProjector(int dim, int cutoff);
    /// cutoff = floor(fraction * dim), clamped to [1, dim-1].
    static InteriorProjector fraction(int dim, double fraction = 0.8);

    int dim() const noexcept { return dim_; }
    int cutoff() const noexcept { return cutoff_; }

    /// Top-left cutoff x cutoff block (P O P written in the interior basis).
    Matrix restrict(const FockOperator& op) const;
    Matrix restrict(const Matrix& m) const;
    double max_abs(const Matrix& m) const;

private:
    int dim_;
    int cutoff_;
};

/// Eigendecomposition op = U diag(lambda) U^dagger of a Hermitian operator,
/// kept so that many functions of the same operator share one solve.
class SpectralDecomposition {
public:
    explicit SpectralDecomposition(const FockOperator& op);

    int dim() const noexcept { return static_cast<int>(eigenvalues_.size()); }
    const Eigen::VectorXd& eigenvalues() const noexcept { return eigenvalues_; }
    const Matrix& eigenvectors() const noexcept { return eigenvectors_; }

    /// U f(lambda) U^dagger; tagged Hermitian.
    FockOperator apply(const std::function<double(double)>& f) const;
    /// Complex-valued version; left untagged.
    FockOperator apply_complex(const std::function<cplx(double)>& f) const;

private:
    Eigen::VectorXd eigenvalues_;
    Matrix eigenvectors_;
};

FockOperator spectral_function(const FockOperator& op, const std::function<double(double)>& f);
FockOperator spectral_function_complex(const FockOperator& op,
                                       const std::function<cplx(double)>& f);

/// Annihilation operator: a[n-1, n] = sqrt(n).
FockOperator build_ladder(int dim);

struct Quadratures {
    FockOperator q;
    FockOperator p;
};

/// q = (a + a^dagger)/sqrt2, p = (a - a^dagger)/(i sqrt2); [q, p] = i away
/// from the truncation edge.
Quadratures build_quadratures(int dim);

/// Operators of one truncated oscillator, with the quadrature spectra
/// computed once and reused for every periodic function of q or p.
class Oscillator {
public:
    explicit Oscillator(int dim);

    int dim() const noexcept { return dim_; }
    const FockOperator& a() const noexcept { return a_; }
    const FockOperator& q() const noexcept { return quad_.q; }
    const FockOperator& p() const noexcept { return quad_.p; }
    const FockOperator& number() const noexcept { return number_; }
    FockOperator identity() const { return FockOperator::identity(dim_); }

    FockOperator of_q(const std::function<double(double)>& f) const { return q_spec_.apply(f); }
    FockOperator of_p(const std::function<double(double)>& f) const { return p_spec_.apply(f); }
    FockOperator of_q_complex(const std::function<cplx(double)>& f) const {
        return q_spec_.apply_complex(f);
    }
    FockOperator of_p_complex(const std::function<cplx(double)>& f) const {
        return p_spec_.apply_complex(f);
    }
    const SpectralDecomposition& q_spectrum() const noexcept { return q_spec_; }
    const SpectralDecomposition& p_spectrum() const noexcept { return p_spec_; }

private:
    int dim_;
    FockOperator a_;
    Quadratures quad_;
    FockOperator number_;
    SpectralDecomposition q_spec_;
    SpectralDecomposition p_spec_;
};

struct TwoDissipators {
    FockOperator m1;
    FockOperator m2;
};

/// M1 = sin(eta q) + i eps cos(eta q) p,  M2 = sin(eta p) - i eps cos(eta p) q,
/// products taken in exactly that order. eps = 0 is accepted and gives the
/// bare sines.
TwoDissipators build_two_dissipators(const Oscillator& osc, double eta, double epsilon);
TwoDissipators build_two_dissipators(int dim, double eta, double epsilon);

/// The four-dissipator baseline L1..L4 with lattice constant eta_square;
/// L3, L4 carry the shift e^{eps*eta_square/2} Id.
std::vector<FockOperator> build_four_dissipators(const Oscillator& osc, double eta_square,
                                                 double epsilon);
std::vector<FockOperator> build_four_dissipators(int dim, double eta_square, double epsilon);

/// Heisenberg action of one dissipator:
/// D*[M](O) = 1/2 M^dagger [O, M] + h.c. = M^dagger O M - 1/2 {M^dagger M, O}.
FockOperator channel_adjoint_term(const FockOperator& m, const FockOperator& o);

}  // namespace fock
}  // namespace gridstab
