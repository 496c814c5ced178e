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

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "gridstab/fock.hpp"

namespace gridstab::gkp {

using fock::FockOperator;
using fock::Oscillator;

/// Square-lattice GKP parameters. `eta` is the dissipator frequency and
/// equals eta_square / 2, with eta_square = sqrt(2 pi d) the lattice constant.
struct GkpParams {
    int d = 2;
    double eta = 0.0;
    double eta_square = 0.0;
    double epsilon = 0.0;

    /// d = 2: eta = sqrt(pi).
    static GkpParams qubit(double epsilon);
    /// d = 1: eta = sqrt(pi/2).
    static GkpParams qunaught(double epsilon);
    static GkpParams from_lattice(int d, double epsilon);

    /// Distance between neighbouring peaks of one codeword comb: d * 2pi / eta_square.
    double comb_spacing() const;
};

/// Pure (state vector) or mixed (density matrix) state on a truncated Fock space.
class QuantumState {
public:
    enum class Kind { Pure, Mixed };

    /// Checks ||v|| = 1 to 1e-10.
    static QuantumState pure(Vector v);
    /// Normalizes first; throws on the zero vector.
    static QuantumState normalized(const Vector& v);
    /// Checks unit trace (1e-8), Hermiticity (1e-10) and positivity (>= -1e-8).
    static QuantumState mixed(Matrix rho);
    /// Skips the positivity eigen-solve; trace and Hermiticity still checked.
    static QuantumState mixed_unchecked_positivity(Matrix rho);

    Kind kind() const noexcept { return kind_; }
    bool is_pure() const noexcept { return kind_ == Kind::Pure; }
    int dim() const noexcept { return dim_; }

    /// Throws ContractViolation for mixed states.
    const Vector& vector() const;
    /// |psi><psi| for pure states.
    Matrix density() const;

    double expectation(const FockOperator& op) const;
    double purity() const;

private:
    QuantumState() = default;
    Kind kind_ = Kind::Pure;
    int dim_ = 0;
    Vector vec_;
    Matrix rho_;
};

/// phi_n(x_j) for n < dim, as a dim x xs.size() matrix (real Hermite functions,
/// <x|n> = phi_n(x)).
Eigen::MatrixXd hermite_functions(int dim, const std::vector<double>& xs);

/// Finite-energy codeword E_eps |psi_k> truncated to dim levels. The dropped
/// tail weight is measured on an extended truncation and must stay below
/// `max_tail_weight`, otherwise TruncationError.
QuantumState build_codeword(int dim, const GkpParams& params, int k,
                            double max_tail_weight = 1e-10);

/// Multiplies Fock amplitudes by e^{-eps (n + 1/2)} and renormalizes.
QuantumState apply_regularizer(const QuantumState& state, double epsilon);

enum class LogicalLabel { PlusZ, MinusZ, PlusX, MinusX, PlusY, MinusY, Magic };

LogicalLabel parse_logical_label(const std::string& text);
std::string to_string(LogicalLabel label);

/// Normalized superposition of the two finite-energy codewords. Only PlusZ
/// (the single codeword) is meaningful for d = 1.
QuantumState build_logical_state(int dim, const GkpParams& params, LogicalLabel label);

struct LogicalFrame {
    FockOperator z;
    FockOperator x;
    FockOperator y;
    /// max|(-iZX) - Y| that the Hermitization discarded.
    double y_antihermitian_residue = 0.0;
};

/// Z = sign(cos(eta q)), X = sign(cos(eta p)), Y = Herm(-i Z X).
LogicalFrame build_logical_frame(const Oscillator& osc, const GkpParams& params);
LogicalFrame build_logical_frame(int dim, const GkpParams& params);

/// <target|rho|target> for a pure target.
double fidelity(const QuantumState& rho, const QuantumState& target);

/// Uhlmann fidelity (tr sqrt(sqrt(rho) sigma sqrt(rho)))^2 between two states
/// of any kind. Used to compare steady states reached from different inputs.
double uhlmann_fidelity(const QuantumState& rho, const QuantumState& sigma);

QuantumState fock_state(int dim, int n);
/// Truncated coherent state with amplitude alpha, renormalized.
QuantumState coherent_state(int dim, cplx alpha);
/// e^{-i shift p}|psi>: translation by `shift` along q.
QuantumState translate_q(const Oscillator& osc, const QuantumState& state, double shift);

/// |psi(x)|^2 (or <x|rho|x>) on the given positions.
std::vector<double> position_density(const QuantumState& state, const std::vector<double>& xs);
/// Local maxima of a sampled curve with height >= rel_height * max.
std::vector<double> local_maxima(const std::vector<double>& xs, const std::vector<double>& ys,
                                 double rel_height);

struct PhaseGrid {
    double x_min = -5.0;
    double x_max = 5.0;
    int nx = 101;
    double p_min = -5.0;
    double p_max = 5.0;
    int np = 101;

    static PhaseGrid square(double half_width, int n);
    std::vector<double> xs() const;
    std::vector<double> ps() const;
};

struct WignerMap {
    std::vector<double> x;
    std::vector<double> p;
    /// values(i, j) = W(x[j], p[i]): rows follow p, columns follow x.
    Eigen::MatrixXd values;
    /// sum W dx dp over the grid.
    double normalization = 0.0;
    /// sqrt(2 dim) + 2; points beyond it see truncation artifacts.
    double validity_extent = 0.0;
    bool exceeds_validity = false;
    int dim = 0;

    double at(int ip, int ix) const { return values(ip, ix); }
    /// Integral over p for every x (position marginal).
    std::vector<double> x_marginal() const;
    /// Integral over x for every p.
    std::vector<double> p_marginal() const;
};

/// W(x, p) = 1/pi * int <x+y|rho|x-y> e^{-2ipy} dy, with rho moved to a
/// fine position grid through the Hermite basis.
WignerMap wigner(const QuantumState& state, const PhaseGrid& grid);

struct WignerMetadata {
    double epsilon = 0.0;
    double eta = 0.0;
    std::string label;
};

/// CSV with the x coordinates in the header row and p in the first column,
/// plus `<path>.json` next to it.
void write_wigner_csv(const std::string& path, const WignerMap& map, const WignerMetadata& meta);

}  // namespace gridstab::gkp
