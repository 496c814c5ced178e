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

#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gridstab/fock.hpp"
#include "gridstab/gkp.hpp"

namespace gridstab::lindblad {

using fock::FockOperator;
using gkp::QuantumState;

struct Jump {
    FockOperator op;
    double rate = 1.0;
    std::string name;
};

/// Purely dissipative generator L(rho) = sum_i rate_i D[M_i](rho).
///
/// The weighted jumps sqrt(rate) M, their adjoints and K = 1/2 sum rate M^dag M
/// are cached at construction so each application costs 2 matmuls per jump
/// plus one for the anticommutator.
class LindbladModel {
public:
    LindbladModel(int dim, std::vector<Jump> jumps);

    int dim() const noexcept { return dim_; }
    const std::vector<Jump>& jumps() const noexcept { return jumps_; }

    /// out = L(rho); rho must be dim x dim. Output is Hermitian whenever rho is.
    void apply(const Matrix& rho, Matrix& out) const;
    Matrix apply(const Matrix& rho) const;
    /// L*(O) = sum rate_i D*[M_i](O).
    Matrix apply_adjoint(const Matrix& o) const;

    nlohmann::json describe() const;

private:
    int dim_;
    std::vector<Jump> jumps_;
    std::vector<Matrix> weighted_;
    std::vector<Matrix> weighted_adj_;
    Matrix half_decay_;
};

/// Model of the two-dissipator stabilizer plus optional photon loss kappa D[a].
LindbladModel make_stabilizer_model(const fock::Oscillator& osc, double eta, double epsilon,
                                    double kappa = 0.0);
LindbladModel make_loss_model(const fock::Oscillator& osc, double kappa);

/// L(rho) as a Hermitian, traceless operator.
FockOperator apply_generator(const LindbladModel& model, const QuantumState& rho);
/// L*(O) for Hermitian O.
FockOperator apply_adjoint(const LindbladModel& model, const FockOperator& o);

struct ToleranceSpec {
    double rtol = 1e-8;
    double atol = 1e-10;
    /// 0 selects a step from the generator norm.
    double initial_step = 0.0;
    double min_step = 1e-10;
    double max_step = std::numeric_limits<double>::infinity();
    long max_steps = 50'000'000;

    nlohmann::json to_json() const;
};

struct NamedObservable {
    std::string name;
    FockOperator op;
};

struct RecordSpec {
    /// Uniform grid of n_records points on [0, t_final] (n_records >= 2).
    int n_records = 101;
    std::vector<NamedObservable> observables;
    std::optional<QuantumState> target;
    bool store_states = false;
    bool check_positivity = true;
};

struct Diagnostics {
    long accepted_steps = 0;
    long rejected_steps = 0;
    long evaluations = 0;
    std::vector<double> step_sizes;
    /// |tr(rho) - 1| removed after each accepted step.
    std::vector<double> trace_corrections;
    /// max|rho - rho^dag|/2 removed after each accepted step.
    std::vector<double> hermitian_corrections;
    /// Smallest eigenvalue at every recorded time (NaN when not checked).
    std::vector<double> min_eigenvalues;
    double total_trace_correction = 0.0;

    double max_trace_correction() const;
    double max_hermitian_correction() const;
    double min_eigenvalue() const;
    nlohmann::json summary() const;
};

struct TrajectoryRecord {
    std::vector<double> times;
    /// Named series in insertion order: observables, then purity, then
    /// fidelity when a target was given.
    std::vector<std::pair<std::string, std::vector<double>>> series;
    std::vector<QuantumState> states;
    /// Density matrix at t_final.
    Matrix final_rho;
    /// |tr(rho_t) - 1| at every recorded time, after renormalization.
    std::vector<double> trace_errors;
    Diagnostics diagnostics;

    const std::vector<double>& get(const std::string& name) const;
    bool has(const std::string& name) const;
    QuantumState final_state() const;
};

/// Adaptive Dormand-Prince 5(4) integration of d rho/dt = L(rho). After every
/// accepted step rho is symmetrized and renormalized to unit trace, and both
/// corrections are logged. Throws StiffFailure when the step falls below
/// min_step and InvariantBreach when a correction exceeds 1e-4, the cumulative
/// trace correction exceeds 1e-6 per unit time, or a recorded state has an
/// eigenvalue below -1e-4.
TrajectoryRecord integrate(const LindbladModel& model, const QuantumState& rho0, double t_final,
                           const ToleranceSpec& solver = {}, const RecordSpec& record = {});

struct SteadyStateSpec {
    /// Stop when ||L(rho)||_F <= tolerance * ||rho||_F.
    double tolerance = 1e-7;
    double initial_horizon = 20.0;
    int max_doublings = 8;
    ToleranceSpec solver;
};

struct SteadyStateResult {
    Matrix rho;
    double residual = 0.0;
    double elapsed_time = 0.0;
    int doublings = 0;

    QuantumState state() const;
};

/// Thrown when the residual stalls above tolerance; carries the best state.
class SteadyStateNotReached : public NonConvergence {
public:
    SteadyStateNotReached(const std::string& what, SteadyStateResult best)
        : NonConvergence(what), best_(std::move(best)) {}
    const SteadyStateResult& best() const noexcept { return best_; }

private:
    SteadyStateResult best_;
};

double generator_residual(const LindbladModel& model, const Matrix& rho);

/// Long-time integration with chunk lengths initial_horizon * 2^k until the
/// relative generator residual drops below tolerance.
SteadyStateResult steady_state(const LindbladModel& model, const QuantumState& rho_guess,
                               const SteadyStateSpec& spec = {});

/// Canonical trajectory CSV: t,N,Z,X,Y,purity,fidelity followed by any other
/// recorded series; absent canonical columns are written as nan. A JSON
/// sidecar with `metadata`, the diagnostics summary and a SHA-1 of the
/// metadata is written next to it.
void write_trajectory(const std::string& csv_path, const TrajectoryRecord& record,
                      const nlohmann::json& metadata);

/// Hex SHA-1 of the compact JSON dump.
std::string config_hash(const nlohmann::json& config);

}  // namespace gridstab::lindblad
