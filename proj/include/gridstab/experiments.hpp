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

#include <json.hpp>

#include "gridstab/gkp.hpp"
#include "gridstab/lindblad.hpp"
#include "gridstab/reduced.hpp"

namespace gridstab::experiments {

using gkp::GkpParams;
using gkp::QuantumState;
using lindblad::ToleranceSpec;
using lindblad::TrajectoryRecord;

// ---------------------------------------------------------------- fitting

struct DecayFit {
    std::string observable;
    double t_min = 0.0;
    double t_max = 0.0;
    double rate = 0.0;
    double amplitude = 0.0;
    /// RMS residual of the log-linear fit.
    double residual = 0.0;
    int points = 0;
    /// Time at which the transient-skip rule opened the window.
    double transient_skip = 0.0;

    nlohmann::json to_json() const;
};

/// Least-squares fit of log y = log A - rate t over t in [t_min, t_max].
/// Throws FitFailure on fewer than 3 usable (positive) samples.
DecayFit fit_exponential(const std::vector<double>& t, const std::vector<double>& y, double t_min,
                         double t_max, const std::string& name = "");

struct PowerLawFit {
    double A = 0.0;
    double n = 0.0;
    /// NaN for single-epsilon fits.
    double r = 0.0;
    /// Covariance of (log A, n, r) (2x2 block for single-epsilon fits).
    Eigen::MatrixXd covariance;
    std::vector<double> residuals;
    int cells = 0;

    nlohmann::json to_json() const;
};

/// log Gamma = log A + n log kappa - r log eps. With a single distinct eps the
/// fit drops r and A absorbs eps^-r. Throws FitFailure below min_cells.
PowerLawFit fit_power_law(const std::vector<double>& kappa, const std::vector<double>& epsilon,
                          const std::vector<double>& rate, int min_cells = 6);

// ---------------------------------------------------------- stabilization

struct StabilizationOptions {
    double kappa = 0.0;
    int n_records = 101;
    ToleranceSpec solver;
    /// Search window for the target regularization (qubit magic target only).
    double target_epsilon_min = 0.1;
    double target_epsilon_max = 0.2;
    bool search_target_epsilon = true;
};

struct StabilizationResult {
    TrajectoryRecord record;
    QuantumState target;
    double target_epsilon = 0.0;
    double final_fidelity = 0.0;
    double final_photon_number = 0.0;
    std::vector<std::pair<double, double>> epsilon_scan;
};

/// Integrates from rho0 under the two-dissipator model (plus loss when
/// kappa > 0). The target is the magic state for d = 2 and the codeword for
/// d = 1. The fidelity series is recomputed against the selected target.
StabilizationResult run_stabilization(int dim, const GkpParams& params, const QuantumState& rho0,
                                      double t_final, const StabilizationOptions& opt = {});

// ------------------------------------------------------------------ energy

struct EnergyOptions {
    std::vector<double> cutoff_fractions{0.7, 0.8};
    double coherent_amplitude = 4.0;
    double t_final = 20.0;
    int n_records = 81;
    ToleranceSpec solver;
    bool run_trajectory = true;
};

struct EnergyCertificate {
    double epsilon = 0.0;
    double eta = 0.0;
    double r = 0.0;
    double lambda = 0.0;
    double mu = 0.0;  // at the largest cutoff
    std::vector<std::pair<int, double>> mu_by_cutoff;
    double mu_relative_change = 0.0;
    bool mu_stable = false;
    double initial_photon_number = 0.0;
    double trajectory_bound = 0.0;
    double max_photon_number = 0.0;
    bool trajectory_ok = false;
    std::vector<double> times;
    std::vector<double> photon_number;
    /// Largest eigenvalue of the interior block of -q sin(2 eta q) - |q|.
    double energy_spot_check = 0.0;

    double mu_over_lambda() const { return mu / lambda; }
    nlohmann::json to_json() const;
};

class CertificationFailure : public NonConvergence {
public:
    CertificationFailure(const std::string& what, EnergyCertificate cert)
        : NonConvergence(what), cert_(std::move(cert)) {}
    const EnergyCertificate& certificate() const noexcept { return cert_; }

private:
    EnergyCertificate cert_;
};

/// lambda = 2 r eps eta (1 - eps eta / 2); mu = top eigenvalue of the
/// interior block of L*(N) + lambda N. Throws CertificationFailure when mu
/// moves by more than 1% across the cutoffs.
EnergyCertificate certify_energy_bound(int dim, double eta, double epsilon, double r,
                                       const EnergyOptions& opt = {});

// ---------------------------------------------------------------- contrast

enum class LogicalAxis { Z, X, Y };
LogicalAxis parse_axis(const std::string& s);
std::string to_string(LogicalAxis a);

struct ContrastOptions {
    int n_records = 201;
    ToleranceSpec solver;
    /// Window opens once <N> is within this fraction of its final value.
    double settle_fraction = 0.05;
    int threads = 2;
};

struct ContrastDecay {
    double kappa = 0.0;
    double epsilon = 0.0;
    LogicalAxis axis = LogicalAxis::Z;
    DecayFit fit;
    std::vector<double> times;
    std::vector<double> contrast;
    std::vector<double> photon_number;
    TrajectoryRecord plus;
    TrajectoryRecord minus;
};

ContrastDecay run_contrast_decay(int dim, const GkpParams& params, double kappa, LogicalAxis axis,
                                 double horizon, const ContrastOptions& opt = {});

// ------------------------------------------------------------------- sweep

struct SweepSpec {
    std::vector<double> kappa_values;
    std::vector<double> epsilon_values;
    double eta = 0.0;
    int dim = 120;
    /// horizon = min(horizon_decays / guess, horizon_max), guess = kappa^0.88 / eps^0.57
    double horizon_decays = 3.0;
    double horizon_max = 300.0;
    int threads = 1;
    ContrastOptions contrast;
};

struct SweepCell {
    double kappa = 0.0;
    double epsilon = 0.0;
    double horizon = 0.0;
    bool valid = false;
    std::string error;
    DecayFit fit;
};

struct SweepResult {
    std::vector<SweepCell> cells;
    std::optional<PowerLawFit> fit;
    std::string fit_error;
};

double sweep_horizon(const SweepSpec& spec, double kappa, double epsilon);

/// Runs the Z contrast decay per cell on a worker pool; cells are ordered
/// kappa-major regardless of completion order.
SweepResult run_scaling_sweep(const SweepSpec& spec);

void write_sweep_table(const std::string& path, const SweepResult& result);

// ---------------------------------------------------------------- qunaught

struct QunaughtOptions {
    lindblad::SteadyStateSpec steady;
    gkp::PhaseGrid grid = gkp::PhaseGrid::square(7.0, 281);
    int threads = 1;
};

struct QunaughtPoint {
    double kappa = 0.0;
    lindblad::SteadyStateResult steady;
    bool converged = false;
    gkp::WignerMap wigner;
    /// |tr(exp(2 i eta q) rho)|
    double visibility = 0.0;
    double spacing_x = 0.0;
    double spacing_p = 0.0;
};

struct QunaughtStudy {
    std::vector<QunaughtPoint> points;
    bool strictly_decreasing = false;
};

/// Median spacing of marginal peaks above rel_height of the maximum.
double peak_spacing(const std::vector<double>& xs, const std::vector<double>& ys, double rel_height = 0.1);

QunaughtStudy run_qunaught_noise_study(int dim, double epsilon, const std::vector<double>& kappa_values,
                                       const QunaughtOptions& opt = {});

// ------------------------------------------------------------- cross-check

struct CrossCheckOptions {
    double horizon = 50.0;
    int n_records = 401;
    ToleranceSpec solver;
    int n_grid = 512;
    /// Fit window: [window_start, first time |y - y_inf| < floor * |y0 - y_inf|].
    double window_start = 2.0;
    double floor = 1e-3;
};

struct CrossCheck {
    double epsilon = 0.0;
    double eta = 0.0;
    double sigma = 0.0;
    double lambda1 = 0.0;
    double predicted_rate = 0.0;
    DecayFit fit;
    double ratio = 0.0;
    double stationary_value = 0.0;
    /// Weighted mean of cos under the generator's own sigma and the
    /// closed-form sigma = 2 eps eta / (1 + 2 eps eta).
    double weighted_mean_generator = 0.0;
    double weighted_mean_closed_form = 0.0;
    std::vector<double> times;
    std::vector<double> values;

    nlohmann::json to_json() const;
};

CrossCheck cross_check_reduced_model(int dim, double epsilon, double eta, const CrossCheckOptions& opt = {});

}  // namespace gridstab::experiments
