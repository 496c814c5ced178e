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

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gridstab/errors.hpp"

namespace gridstab::reduced {

/// Diffusion parameter of the reduced operator
///   A f = sin(theta) f' - sigma (1 + cos theta) f''.
struct ReducedParams {
    double sigma = 0.0;
    std::optional<double> epsilon;
    std::optional<double> eta;

    /// Requires 0 < sigma < 2.
    static ReducedParams from_sigma(double sigma);
    /// sigma = 2 eps eta / (1 + 2 eps eta).
    static ReducedParams from_physical(double epsilon, double eta);
};

/// sigma obtained by matching the drift and diffusion coefficients that the
/// two-dissipator generator actually produces on f(2 eta q):
/// eps eta / (1 + eps eta).
double generator_sigma(double epsilon, double eta);

double weight(double sigma, double theta);   // (1+cos)^(1/sigma - 1)
double weight2(double sigma, double theta);  // (1+cos)^(1/sigma)

/// Galerkin discretization of the Dirichlet form
///   <f, A g>_w = sigma \int w2 f' g',   <f, g>_w = \int w f g.
///
/// theta is a midpoint grid on (-pi, pi), so the degenerate point theta = pi
/// sits at the cut. Basis columns: 1, cos k, sin k (k <= modes) and the
/// half-integer sines sin((k+1/2) theta) (k = 0..modes). The latter are not
/// 2pi-periodic; they resolve eigenfunctions whose one-sided limits at
/// theta = pi differ, which the degenerate weight permits at zero energy.
struct SpectralProblem {
    ReducedParams params;
    int n_grid = 0;
    int modes = 0;
    Eigen::VectorXd theta;
    Eigen::VectorXd w;
    Eigen::VectorXd w2;
    /// basis(i, j) = phi_i(theta_j); basis_derivative likewise.
    Eigen::MatrixXd basis;
    Eigen::MatrixXd basis_derivative;
    Eigen::MatrixXd stiffness;
    Eigen::MatrixXd mass;
    /// Ascending eigenvalues of the pencil on the numerically non-null part
    /// of the mass matrix.
    Eigen::VectorXd eigenvalues;
    /// Coefficient vectors, mass-orthonormal; column j pairs with eigenvalues[j].
    Eigen::MatrixXd eigenvectors;
    int retained = 0;
    std::string warning;

    int basis_size() const noexcept { return static_cast<int>(basis.rows()); }
    double symmetry_residual() const;
    /// Coefficients of the constant function 1.
    Eigen::VectorXd constant_coefficients() const;
    Eigen::VectorXd values(const Eigen::VectorXd& coefficients) const;
    double rayleigh_quotient(const Eigen::VectorXd& coefficients) const;
    /// \int f w dtheta for a coefficient vector.
    double weighted_integral(const Eigen::VectorXd& coefficients) const;
};

/// Requires 0 < sigma < 2 and n_grid >= 64, even. Basis modes = n_grid / 8,
/// leaving the quadrature 4x oversampled against the highest product.
SpectralProblem build_problem(const ReducedParams& params, int n_grid = 512);

/// lambda_1: smallest eigenvalue above the constant-function kernel.
double spectral_gap(const SpectralProblem& problem);

struct GapStudy {
    double sigma = 0.0;
    double lambda1 = 0.0;
    int n_grid = 0;
    double relative_change = 0.0;
    bool converged = false;
    std::vector<std::pair<int, double>> history;
};

class RefinementFailure : public NonConvergence {
public:
    RefinementFailure(const std::string& what, GapStudy study)
        : NonConvergence(what), study_(std::move(study)) {}
    const GapStudy& study() const noexcept { return study_; }

private:
    GapStudy study_;
};

/// Doubles n_grid until lambda_1 changes by at most rel_tol (at least one
/// doubling). Throws RefinementFailure after max_doublings.
GapStudy converged_gap(const ReducedParams& params, int n_grid = 512, double rel_tol = 1e-3,
                       int max_doublings = 3);

/// gamma = eps eta (1 + 2 eps eta) lambda_1.
double predicted_rate(double epsilon, double eta, double lambda1);

double hardy_constant(double sigma);  // 16 sigma^2 / (2 - sigma)^2

enum class HardySide { Plus, Minus };  // [pi, 3pi/2] or [pi/2, pi]

struct HardySides {
    double lhs = 0.0;  // ||g||^2 in L2(w)
    double rhs = 0.0;  // ||g'||^2 in L2(w2), without the constant
};

HardySides hardy_sides(double sigma, HardySide side, const std::function<double(double)>& g,
                       const std::function<double(double)>& dg);

struct HardyViolation {
    HardySide side;
    std::vector<double> coefficients;
    double lhs;
    double bound;
};

struct HardyReport {
    double sigma = 0.0;
    double constant = 0.0;
    int tests = 0;
    double max_ratio = 0.0;  // max lhs / (constant * rhs)
    std::vector<HardyViolation> violations;
};

/// n_test random g per side: g = (distance to the outer endpoint) * P(s),
/// P of degree <= 6 with coefficients uniform in [-1, 1], s in [0, 1] the
/// normalized distance from theta = pi.
HardyReport verify_hardy(const ReducedParams& params, int n_test, std::uint64_t seed = 20260101);

struct WeightBounds {
    double w_min, w_max, w2_min, w2_max;
};

/// Extremes of w and w2 on I2 = [0, pi/2] u [3pi/2, 2pi].
WeightBounds weight_bounds_on_i2(double sigma);

/// \int f w / \int w over the circle by adaptive quadrature.
double weighted_mean(double sigma, const std::function<double(double)>& f);

struct GapRow {
    double sigma;
    double lambda1;
    double gamma;  // NaN when no physical parameters are attached
    int n_grid;
    bool converged;
};

void write_gap_table(const std::string& path, const std::vector<GapRow>& rows);

}  // namespace gridstab::reduced
