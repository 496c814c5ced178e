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

// gridstab command-line driver. Every subcommand resolves its configuration
// (flags > config file > preset), echoes it to <out>/manifest.json, runs, and
// prints a single JSON summary line on stdout. Bulk data goes to files.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gridstab/experiments.hpp"

#ifndef GRIDSTAB_VERSION
#define GRIDSTAB_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gridstab;
using std::numbers::pi;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kInsufficient = 4 };

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Raw values as given on the command line or in the config file.
struct Flags {
    std::string preset = "qubit";
    std::optional<double> eta, epsilon, kappa, tmax, rtol, atol, r;
    std::optional<int> dim, threads, records, n_grid, hardy;
    std::optional<std::string> out;
    std::vector<double> kappas, epsilons, sigmas;
    std::string state = "vacuum";
    double extent = 6.0;
    int points = 241;
};

struct RunConfig {
    std::string command;
    std::string preset;
    double eta = 0.0;
    double epsilon = 0.0;
    double kappa = 0.0;
    int dim = 0;
    double tmax = 0.0;
    double rtol = 1e-8;
    double atol = 1e-10;
    int records = 101;
    int threads = 1;
    fs::path out;

    lindblad::ToleranceSpec solver() const {
        lindblad::ToleranceSpec s;
        s.rtol = rtol;
        s.atol = atol;
        return s;
    }
    json to_json() const {
        return {{"command", command}, {"preset", preset}, {"eta", eta},         {"epsilon", epsilon},
                {"kappa", kappa},     {"dim", dim},       {"tmax", tmax},       {"rtol", rtol},
                {"atol", atol},       {"records", records}, {"threads", threads}, {"out", out.string()}};
    }
};

struct Defaults {
    int dim;
    double tmax;
};

// Per-command defaults for dim and horizon when the user gives neither.
Defaults command_defaults(const std::string& cmd, const std::string& preset) {
    if (cmd == "noise-sweep") return {120, 0.0};
    if (cmd == "crosscheck") return {140, 50.0};
    if (cmd == "certify-energy") return {120, 20.0};
    if (cmd == "qunaught") return {120, 0.0};
    if (cmd == "wigner") return {60, 0.0};
    return {120, preset == "qunaught" ? 100.0 : 30.0};
}

RunConfig resolve(const std::string& cmd, const Flags& f) {
    RunConfig c;
    c.command = cmd;
    c.preset = f.preset;
    if (f.preset == "qubit" || f.preset == "qunaught") {
        if (f.eta) throw ConfigError("--eta is fixed by --preset " + f.preset + "; use --preset custom");
        c.eta = f.preset == "qubit" ? std::sqrt(pi) : std::sqrt(pi / 2);
        c.epsilon = f.epsilon.value_or(0.15);
    } else if (f.preset == "custom") {
        if (!f.eta) throw ConfigError("--preset custom requires --eta");
        if (!f.epsilon) throw ConfigError("--preset custom requires --epsilon");
        c.eta = *f.eta;
        c.epsilon = *f.epsilon;
    } else {
        throw ConfigError("unknown --preset '" + f.preset + "' (qubit | qunaught | custom)");
    }
    const Defaults d = command_defaults(cmd, f.preset);
    c.kappa = f.kappa.value_or(0.0);
    c.dim = f.dim.value_or(d.dim);
    c.tmax = f.tmax.value_or(d.tmax);
    c.rtol = f.rtol.value_or(1e-8);
    c.atol = f.atol.value_or(1e-10);
    c.records = f.records.value_or(101);
    c.threads = f.threads.value_or(std::max(1u, std::thread::hardware_concurrency()));
    c.out = f.out.value_or("gridstab_out/" + cmd);

    if (!(c.eta > 0.0)) throw ConfigError("--eta must be positive");
    if (!(c.epsilon > 0.0)) throw ConfigError("--epsilon must be positive");
    if (c.kappa < 0.0) throw ConfigError("--kappa must be >= 0");
    if (c.dim < 2) throw ConfigError("--dim must be >= 2");
    if (c.tmax < 0.0) throw ConfigError("--tmax must be >= 0");
    if (c.records < 2) throw ConfigError("--records must be >= 2");
    if (!(c.rtol > 0.0) || !(c.atol > 0.0)) throw ConfigError("--rtol and --atol must be positive");
    return c;
}

// Lattice dimension implied by eta: 2 for eta^2 = pi, 1 for eta^2 = pi/2.
gkp::GkpParams lattice(const RunConfig& c) {
    const double d = 2.0 * c.eta * c.eta / pi;
    const int di = static_cast<int>(std::lround(d));
    if ((di == 1 || di == 2) && std::abs(d - di) < 1e-9) return gkp::GkpParams::from_lattice(di, c.epsilon);
    throw ConfigError("eta^2 must be pi (qubit) or pi/2 (qunaught) for this command");
}

void write_json(const fs::path& p, const json& j) {
    std::ofstream out(p);
    if (!out) throw ConfigError("cannot write " + p.string());
    out << j.dump(2) << '\n';
}

// Flat key = value form of the resolved configuration; feeding it back via
// --config reproduces the run.
void write_resolved_config(const fs::path& p, const RunConfig& c, const json& extra) {
    std::ofstream out(p);
    out.precision(17);
    out << "preset = \"" << c.preset << "\"\n";
    if (c.preset == "custom") out << "eta = " << c.eta << '\n';
    out << "epsilon = " << c.epsilon << "\nkappa = " << c.kappa << "\ndim = " << c.dim << "\ntmax = " << c.tmax
        << "\nrtol = " << c.rtol << "\natol = " << c.atol << "\nrecords = " << c.records << "\nthreads = " << c.threads
        << "\nout = \"" << c.out.string() << "\"\n";
    for (auto it = extra.begin(); it != extra.end(); ++it) {
        if (it->is_array() && it->empty()) continue;
        out << it.key() << " = " << it->dump() << '\n';
    }
}

void prepare_output(const RunConfig& c, const json& extra) {
    fs::create_directories(c.out);
    json m = {{"tool", "gridstab"}, {"version", GRIDSTAB_VERSION}, {"config", c.to_json()}, {"parameters", extra}};
    m["config_hash"] = lindblad::config_hash({{"config", m["config"]}, {"parameters", extra}});
    write_json(c.out / "manifest.json", m);
    write_resolved_config(c.out / "resolved.toml", c, extra);
}

json trajectory_meta(const RunConfig& c, const json& extra = json::object()) {
    json m = c.to_json();
    m.erase("out");
    m.erase("threads");
    for (auto it = extra.begin(); it != extra.end(); ++it) m[it.key()] = it.value();
    return m;
}

double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- commands

json cmd_stabilize(const RunConfig& c) {
    const auto params = lattice(c);
    prepare_output(c, json::object());
    experiments::StabilizationOptions opt;
    opt.kappa = c.kappa;
    opt.n_records = c.records;
    opt.solver = c.solver();
    const auto res = experiments::run_stabilization(c.dim, params, gkp::fock_state(c.dim, 0), c.tmax, opt);
    fs::create_directories(c.out / "trajectories");
    fs::create_directories(c.out / "wigner");
    lindblad::write_trajectory((c.out / "trajectories" / "stabilize.csv").string(), res.record,
                               trajectory_meta(c, {{"target_epsilon", res.target_epsilon}}));
    const auto w = gkp::wigner(res.record.final_state(), gkp::PhaseGrid::square(6.0, 241));
    gkp::write_wigner_csv((c.out / "wigner" / "final.csv").string(), w, {c.epsilon, c.eta, "final"});
    json scan = json::array();
    for (const auto& [e, f] : res.epsilon_scan) scan.push_back({e, f});
    json s = {{"fidelity", res.final_fidelity},
              {"target_epsilon", res.target_epsilon},
              {"target", params.d == 2 ? "magic" : "codeword"},
              {"N", res.final_photon_number},
              {"epsilon_scan", scan},
              {"diagnostics", res.record.diagnostics.summary()}};
    return s;
}

json cmd_noise_sweep(const RunConfig& c, const Flags& f, int& code) {
    experiments::SweepSpec spec;
    spec.kappa_values = f.kappas.empty() ? std::vector<double>{5e-3, 1e-2, 2e-2} : f.kappas;
    spec.epsilon_values = f.epsilons.empty() ? std::vector<double>{0.1, 0.15, 0.2} : f.epsilons;
    spec.eta = c.eta;
    spec.dim = c.dim;
    spec.threads = c.threads;
    spec.contrast.solver = c.solver();
    spec.contrast.n_records = std::max(c.records, 201);
    if (c.tmax > 0) spec.horizon_max = c.tmax;
    if (std::abs(c.eta * c.eta - pi) > 1e-9) throw ConfigError("noise-sweep requires the qubit lattice");
    for (double k : spec.kappa_values)
        if (!(k > 0 && k < 1)) throw ConfigError("--kappas entries must lie in (0, 1)");
    for (double e : spec.epsilon_values)
        if (!(e > 0)) throw ConfigError("--epsilons entries must be positive");
    if (spec.kappa_values.size() * spec.epsilon_values.size() < 6 && spec.epsilon_values.size() > 1)
        throw ConfigError("noise-sweep needs a grid of at least 3x2 cells");
    prepare_output(c, {{"kappas", spec.kappa_values}, {"epsilons", spec.epsilon_values}});

    const auto res = experiments::run_scaling_sweep(spec);
    experiments::write_sweep_table((c.out / "sweep_table.csv").string(), res);
    json cells = json::array();
    for (const auto& cell : res.cells) {
        json j = {{"kappa", cell.kappa}, {"epsilon", cell.epsilon}, {"horizon", cell.horizon}, {"valid", cell.valid}};
        if (cell.valid) j["fit"] = cell.fit.to_json();
        else j["error"] = cell.error;
        cells.push_back(j);
    }
    json fits = {{"cells", cells}};
    json s;
    if (res.fit) {
        fits["power_law"] = res.fit->to_json();
        s = {{"A", res.fit->A}, {"n", res.fit->n}, {"r", fits["power_law"]["r"]}, {"cells", res.fit->cells}};
    } else {
        fits["power_law"] = nullptr;
        fits["error"] = res.fit_error;
        s = {{"error", res.fit_error}};
        code = kInsufficient;
    }
    write_json(c.out / "fits.json", fits);
    return s;
}

json cmd_spectral(const RunConfig& c, const Flags& f) {
    std::vector<reduced::ReducedParams> ps;
    for (double s : f.sigmas) {
        if (!(s > 0.0 && s < 2.0)) throw ConfigError("--sigmas entries must lie in (0, 2)");
        ps.push_back(reduced::ReducedParams::from_sigma(s));
    }
    for (double e : f.epsilons) {
        if (!(e > 0.0)) throw ConfigError("--epsilons entries must be positive");
        ps.push_back(reduced::ReducedParams::from_physical(e, c.eta));
    }
    if (ps.empty()) ps.push_back(reduced::ReducedParams::from_physical(c.epsilon, c.eta));
    const int n_grid = f.n_grid.value_or(512);
    if (n_grid < 64 || n_grid % 2) throw ConfigError("--n-grid must be even and >= 64");
    prepare_output(c, {{"sigmas", f.sigmas}, {"epsilons", f.epsilons}, {"n-grid", n_grid}, {"hardy", f.hardy.value_or(0)}});

    std::vector<reduced::GapRow> rows;
    json out = json::array();
    for (const auto& p : ps) {
        reduced::GapStudy st;
        try {
            st = reduced::converged_gap(p, n_grid);
        } catch (const reduced::RefinementFailure& e) {
            st = e.study();
        }
        const double gamma = p.epsilon ? reduced::predicted_rate(*p.epsilon, *p.eta, st.lambda1)
                                       : std::numeric_limits<double>::quiet_NaN();
        rows.push_back({p.sigma, st.lambda1, gamma, st.n_grid, st.converged});
        json j = {{"sigma", p.sigma}, {"lambda1", st.lambda1}, {"n_grid", st.n_grid}, {"converged", st.converged}};
        if (p.epsilon) {
            j["epsilon"] = *p.epsilon;
            j["eta"] = *p.eta;
            j["gamma"] = gamma;
        }
        if (f.hardy && *f.hardy > 0) {
            const auto h = reduced::verify_hardy(p, *f.hardy);
            j["hardy"] = {{"tests", h.tests}, {"violations", h.violations.size()}, {"max_ratio", h.max_ratio},
                          {"constant", h.constant}};
        }
        out.push_back(j);
    }
    reduced::write_gap_table((c.out / "gap_table.csv").string(), rows);
    return {{"rows", out}};
}

json cmd_certify(const RunConfig& c, const Flags& f) {
    const double r = f.r.value_or(0.9);
    if (!(r > 0 && r < 1)) throw ConfigError("--r must lie in (0, 1)");
    if (!(c.epsilon < 2.0 / c.eta)) throw ConfigError("--epsilon must be below 2/eta");
    prepare_output(c, {{"r", r}});
    experiments::EnergyOptions opt;
    opt.t_final = c.tmax;
    opt.solver = c.solver();
    opt.n_records = c.records;
    json cert;
    try {
        cert = experiments::certify_energy_bound(c.dim, c.eta, c.epsilon, r, opt).to_json();
    } catch (const experiments::CertificationFailure& e) {
        write_json(c.out / "certificate.json", e.certificate().to_json());
        throw;
    }
    write_json(c.out / "certificate.json", cert);
    return {{"lambda", cert["lambda"]},
            {"mu", cert["mu"]},
            {"mu_over_lambda", cert["mu_over_lambda"]},
            {"mu_stable", cert["mu_stable"]},
            {"trajectory_ok", cert["trajectory_ok"]}};
}

json cmd_qunaught(const RunConfig& c, const Flags& f) {
    if (std::abs(c.eta * c.eta - pi / 2) > 1e-9) throw ConfigError("qunaught requires --preset qunaught");
    const std::vector<double> kappas = f.kappas.empty() ? std::vector<double>{0.0, 1e-3, 1e-2, 5e-2} : f.kappas;
    for (double k : kappas)
        if (k < 0) throw ConfigError("--kappas entries must be >= 0");
    prepare_output(c, {{"kappas", kappas}});
    experiments::QunaughtOptions opt;
    opt.threads = c.threads;
    opt.steady.solver = c.solver();
    if (c.tmax > 0) opt.steady.initial_horizon = c.tmax;
    const auto st = experiments::run_qunaught_noise_study(c.dim, c.epsilon, kappas, opt);
    fs::create_directories(c.out / "wigner");
    json pts = json::array();
    for (const auto& p : st.points) {
        std::ostringstream name;
        name << "qunaught_kappa_" << p.kappa << ".csv";
        gkp::write_wigner_csv((c.out / "wigner" / name.str()).string(), p.wigner,
                              {c.epsilon, c.eta, "kappa=" + std::to_string(p.kappa)});
        pts.push_back({{"kappa", p.kappa},
                       {"visibility", p.visibility},
                       {"spacing_x", p.spacing_x},
                       {"spacing_p", p.spacing_p},
                       {"residual", p.steady.residual},
                       {"elapsed_time", p.steady.elapsed_time}});
    }
    json s = {{"points", pts}, {"strictly_decreasing", st.strictly_decreasing}};
    write_json(c.out / "qunaught.json", s);
    return s;
}

json cmd_crosscheck(const RunConfig& c, const Flags& f) {
    if (std::abs(c.eta * c.eta - pi) > 1e-9) throw ConfigError("crosscheck requires the qubit lattice");
    prepare_output(c, json::object());
    experiments::CrossCheckOptions opt;
    opt.horizon = c.tmax;
    opt.solver = c.solver();
    opt.n_records = std::max(c.records, 401);
    if (f.n_grid) opt.n_grid = *f.n_grid;
    const auto cc = experiments::cross_check_reduced_model(c.dim, c.epsilon, c.eta, opt);
    const json j = cc.to_json();
    write_json(c.out / "crosscheck.json", j);
    fs::create_directories(c.out / "trajectories");
    std::ofstream csv(c.out / "trajectories" / "crosscheck.csv");
    csv.precision(12);
    csv << "t,cos2etaq\n";
    for (std::size_t i = 0; i < cc.times.size(); ++i) csv << cc.times[i] << ',' << cc.values[i] << '\n';
    return {{"ratio", cc.ratio},
            {"fitted_rate", cc.fit.rate},
            {"predicted_rate", cc.predicted_rate},
            {"stationary_value", cc.stationary_value}};
}

gkp::QuantumState parse_state(const std::string& s, const RunConfig& c) {
    auto arg = [&](const std::string& prefix) { return s.substr(prefix.size()); };
    if (s == "vacuum") return gkp::fock_state(c.dim, 0);
    if (s.rfind("fock:", 0) == 0) return gkp::fock_state(c.dim, std::stoi(arg("fock:")));
    if (s.rfind("coherent:", 0) == 0) return gkp::coherent_state(c.dim, cplx(std::stod(arg("coherent:")), 0.0));
    if (s.rfind("codeword:", 0) == 0) return gkp::build_codeword(c.dim, lattice(c), std::stoi(arg("codeword:")));
    return gkp::build_logical_state(c.dim, lattice(c), gkp::parse_logical_label(s));
}

json cmd_wigner(const RunConfig& c, const Flags& f) {
    if (!(f.extent > 0) || f.points < 2) throw ConfigError("--extent must be positive and --points >= 2");
    std::optional<gkp::QuantumState> state;
    try {
        state = parse_state(f.state, c);
    } catch (const std::invalid_argument&) {
        throw ConfigError("cannot parse --state '" + f.state + "'");
    }
    prepare_output(c, {{"state", f.state}, {"extent", f.extent}, {"points", f.points}});
    const auto w = gkp::wigner(*state, gkp::PhaseGrid::square(f.extent, f.points));
    fs::create_directories(c.out / "wigner");
    gkp::write_wigner_csv((c.out / "wigner" / "state.csv").string(), w, {c.epsilon, c.eta, f.state});
    return {{"normalization", w.normalization}, {"exceeds_validity", w.exceeds_validity}};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gridstab: dissipative GKP stabilization experiments"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_config("--config", "", "flat key = value file mirroring the flag names");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.set_version_flag("--version", GRIDSTAB_VERSION);

    Flags f;
    app.add_option("--preset", f.preset, "qubit | qunaught | custom")->capture_default_str();
    app.add_option("--eta", f.eta, "lattice parameter (custom preset only)");
    app.add_option("--epsilon", f.epsilon, "regularization");
    app.add_option("--kappa", f.kappa, "single-photon loss rate");
    app.add_option("--dim", f.dim, "Fock truncation");
    app.add_option("--tmax", f.tmax, "integration horizon");
    app.add_option("--rtol", f.rtol, "relative tolerance");
    app.add_option("--atol", f.atol, "absolute tolerance");
    app.add_option("--records", f.records, "number of recorded times");
    app.add_option("--out", f.out, "output directory");
    app.add_option("--threads", f.threads, "worker threads");
    app.add_option("--kappas", f.kappas, "kappa grid")->delimiter(',');
    app.add_option("--epsilons", f.epsilons, "epsilon grid")->delimiter(',');
    app.add_option("--sigmas", f.sigmas, "sigma list")->delimiter(',');
    app.add_option("--r", f.r, "certificate fraction in (0, 1)");
    app.add_option("--n-grid", f.n_grid, "reduced-model grid size");
    app.add_option("--hardy", f.hardy, "random Hardy tests per side");
    app.add_option("--state", f.state, "vacuum | fock:n | coherent:a | codeword:k | +Z | ... | magic");
    app.add_option("--extent", f.extent, "Wigner half width");
    app.add_option("--points", f.points, "Wigner points per axis");

    const std::vector<std::pair<std::string, std::string>> cmds = {
        {"stabilize", "integrate from vacuum and report fidelity to the target"},
        {"noise-sweep", "contrast decay rates over a (kappa, epsilon) grid and power-law fit"},
        {"spectral", "spectral gap of the reduced operator"},
        {"certify-energy", "photon-number certificate"},
        {"qunaught", "qunaught steady states versus kappa"},
        {"crosscheck", "full model versus reduced-model decay rate"},
        {"wigner", "Wigner function of a named state"}};
    for (const auto& [name, desc] : cmds) app.add_subcommand(name, desc);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        std::cout << json{{"error", e.what()}, {"exit_code", int(kConfig)}}.dump() << std::endl;
        return kConfig;
    }
    const std::string cmd = app.get_subcommands().front()->get_name();

    const auto t0 = std::chrono::steady_clock::now();
    int code = kOk;
    json summary;
    try {
        const RunConfig c = resolve(cmd, f);
        if (cmd == "stabilize") summary = cmd_stabilize(c);
        else if (cmd == "noise-sweep") summary = cmd_noise_sweep(c, f, code);
        else if (cmd == "spectral") summary = cmd_spectral(c, f);
        else if (cmd == "certify-energy") summary = cmd_certify(c, f);
        else if (cmd == "qunaught") summary = cmd_qunaught(c, f);
        else if (cmd == "crosscheck") summary = cmd_crosscheck(c, f);
        else if (cmd == "wigner") summary = cmd_wigner(c, f);
        summary["out"] = c.out.string();
        write_json(c.out / "summary.json", summary);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        summary = {{"error", e.what()}};
        code = kConfig;
    } catch (const TruncationError& e) {
        std::cerr << "config error: " << e.what() << " (increase --dim)\n";
        summary = {{"error", e.what()}, {"tail_weight", e.tail_weight()}};
        code = kConfig;
    } catch (const InvalidParameter& e) {
        std::cerr << "config error: " << e.what() << '\n';
        summary = {{"error", e.what()}};
        code = kConfig;
    } catch (const InvalidDimension& e) {
        std::cerr << "config error: " << e.what() << '\n';
        summary = {{"error", e.what()}};
        code = kConfig;
    } catch (const FitFailure& e) {
        std::cerr << "insufficient data: " << e.what() << '\n';
        summary = {{"error", e.what()}};
        code = kInsufficient;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        summary = {{"error", e.what()}};
        code = kSolver;
    }
    summary["command"] = cmd;
    summary["exit_code"] = code;
    summary["runtime_s"] = elapsed(t0);
    std::cout << summary.dump() << std::endl;
    return code;
}
