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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include <doctest.h>
#include <json.hpp>

#include "gridstab/gkp.hpp"

using namespace gridstab;
using namespace gridstab::gkp;
using std::numbers::pi;

namespace {

std::vector<double> grid(double lo, double hi, double step) {
    std::vector<double> xs;
    for (double x = lo; x <= hi + 1e-12; x += step) xs.push_back(x);
    return xs;
}

double expectation_pure(const QuantumState& s, const fock::FockOperator& op) {
    return s.vector().dot(op.matrix() * s.vector()).real();
}

}  // namespace

TEST_CASE("gkp params") {
    const GkpParams qb = GkpParams::qubit(0.15);
    CHECK(qb.d == 2);
    CHECK(std::abs(qb.eta * qb.eta - pi) < 1e-12);
    CHECK(std::abs(qb.eta_square - 2.0 * qb.eta) < 1e-15);
    const GkpParams qn = GkpParams::qunaught(0.15);
    CHECK(std::abs(qn.eta * qn.eta - pi / 2) < 1e-12);
    CHECK(std::abs(qn.comb_spacing() - std::sqrt(2 * pi)) < 1e-12);
    CHECK(std::abs(qb.comb_spacing() - 2 * std::sqrt(pi)) < 1e-12);
    CHECK_THROWS_AS(GkpParams::from_lattice(3, 0.1), InvalidParameter);
    CHECK_THROWS_AS(GkpParams::from_lattice(2, 0.0), InvalidParameter);
}

TEST_CASE("hermite functions are orthonormal") {
    const auto xs = grid(-12.0, 12.0, 0.01);
    const Eigen::MatrixXd phi = hermite_functions(30, xs);
    const Eigen::MatrixXd gram = phi * phi.transpose() * 0.01;
    CHECK((gram - Eigen::MatrixXd::Identity(30, 30)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("codeword peaks sit on the comb") {
    for (int d : {1, 2}) {
        const GkpParams params = GkpParams::from_lattice(d, 0.15);
        for (int k = 0; k < d; ++k) {
            const QuantumState cw = build_codeword(120, params, k);
            const auto xs = grid(-9.0, 9.0, 0.005);
            const auto peaks = local_maxima(xs, position_density(cw, xs), 0.1);
            REQUIRE(peaks.size() >= (k == 0 ? 3u : 2u));
            const double unit = 2 * pi / params.eta_square;
            for (double x : peaks) {
                const double m = (x / unit - k) / d;
                CHECK(std::abs(x - (std::round(m) * d + k) * unit) <= 0.05);
            }
            if (k == 0) {
                // adjacent peaks of one comb are d * 2pi/eta_square apart
                for (std::size_t i = 1; i < peaks.size(); ++i) {
                    CHECK(std::abs(peaks[i] - peaks[i - 1] - params.comb_spacing()) <= 0.1);
                }
            }
        }
    }
}

TEST_CASE("codeword energy grows as epsilon shrinks") {
    const fock::Oscillator osc(120);
    const double n15 = expectation_pure(build_codeword(120, GkpParams::qubit(0.15), 0), osc.number());
    const double n30 = expectation_pure(build_codeword(120, GkpParams::qubit(0.3), 0), osc.number());
    CHECK(std::isfinite(n15));
    CHECK(n30 < n15);
}

TEST_CASE("codeword truncation check") {
    try {
        build_codeword(30, GkpParams::qubit(0.05), 0);
        FAIL("expected TruncationError");
    } catch (const TruncationError& e) {
        CHECK(e.tail_weight() > 1e-10);
    }
}

TEST_CASE("regularizer with zero epsilon is the identity") {
    const QuantumState cw = build_codeword(80, GkpParams::qubit(0.2), 1);
    const QuantumState again = apply_regularizer(cw, 0.0);
    CHECK((again.vector() - cw.vector()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("logical states and frame") {
    const int dim = 120;
    const GkpParams params = GkpParams::qubit(0.15);
    const fock::Oscillator osc(dim);
    const LogicalFrame frame = build_logical_frame(osc, params);

    const QuantumState pz = build_logical_state(dim, params, LogicalLabel::PlusZ);
    const QuantumState mz = build_logical_state(dim, params, LogicalLabel::MinusZ);
    const QuantumState px = build_logical_state(dim, params, LogicalLabel::PlusX);
    const QuantumState py = build_logical_state(dim, params, LogicalLabel::PlusY);

    CHECK(std::abs(pz.vector().dot(mz.vector())) <= 0.05);
    CHECK(expectation_pure(pz, frame.z) >= 0.9);
    CHECK(expectation_pure(mz, frame.z) <= -0.9);
    CHECK(expectation_pure(px, frame.x) >= 0.9);
    CHECK(expectation_pure(py, frame.y) >= 0.8);
    CHECK(std::abs(expectation_pure(pz, frame.x)) <= 0.1);

    const QuantumState magic = build_logical_state(dim, params, LogicalLabel::Magic);
    const Vector manual = std::cos(pi / 8) * pz.vector() + std::sin(pi / 8) * mz.vector();
    CHECK((magic.vector() - manual / manual.norm()).cwiseAbs().maxCoeff() < 1e-14);

    // Z and X are involutions away from the truncation edge.
    const auto proj = fock::InteriorProjector::fraction(dim);
    const Matrix id = Matrix::Identity(dim, dim);
    CHECK(proj.max_abs(frame.z.matrix() * frame.z.matrix() - id) <= 1e-8);
    CHECK(proj.max_abs(frame.x.matrix() * frame.x.matrix() - id) <= 1e-8);
    // Z is diagonal in the q eigenbasis with entries +-1.
    const Matrix& u = osc.q_spectrum().eigenvectors();
    const Matrix zq = u.adjoint() * frame.z.matrix() * u;
    for (int i = 0; i < dim; ++i) CHECK(std::abs(std::abs(zq(i, i).real()) - 1.0) < 1e-10);
    CHECK(frame.y.hermitian());
    CHECK(frame.y_antihermitian_residue >= 0.0);

    CHECK_THROWS_AS(build_logical_state(dim, GkpParams::qunaught(0.15), LogicalLabel::PlusX), InvalidParameter);
    CHECK_NOTHROW(build_logical_state(dim, GkpParams::qunaught(0.15), LogicalLabel::PlusZ));
    CHECK_THROWS_AS(build_logical_frame(osc, GkpParams::qunaught(0.15)), InvalidParameter);
    CHECK(parse_logical_label("magic") == LogicalLabel::Magic);
    CHECK_THROWS_AS(parse_logical_label("+W"), InvalidParameter);
}

TEST_CASE("dissipator kernel on matched codewords") {
    const int dim = 80;
    const double eps = 0.15;
    const fock::Oscillator osc(dim);
    const double eta = std::sqrt(pi);
    const auto [m1, m2] = fock::build_two_dissipators(osc, eta, eps);
    // the matched codeword keeps ~1e-6 of its weight above level 80
    const QuantumState cw = build_codeword(dim, GkpParams::from_lattice(2, eps / eta), 0, 1e-5);
    CHECK(expectation_pure(cw, m1.adjoint() * m1) <= 1e-2);
    CHECK(expectation_pure(cw, m2.adjoint() * m2) <= 1e-2);

    const int big = 200;
    const fock::Oscillator osc4(big);
    const auto four = fock::build_four_dissipators(osc4, 2 * eta, eps);
    const QuantumState cw4 = build_codeword(big, GkpParams::from_lattice(2, eps / (2 * eta)), 0, 1e-6);
    CHECK(expectation_pure(cw4, four[0].adjoint() * four[0]) <= 5e-2);
    CHECK(expectation_pure(cw4, four[1].adjoint() * four[1]) <= 5e-2);
    CHECK(expectation_pure(cw4, four[2].adjoint() * four[2]) <= 6e-2);
    CHECK(expectation_pure(cw4, four[3].adjoint() * four[3]) <= 6e-2);
}

TEST_CASE("fidelity") {
    const QuantumState cw = build_codeword(60, GkpParams::qubit(0.2), 0);
    CHECK(fidelity(cw, cw) == doctest::Approx(1.0).epsilon(1e-10));
    const QuantumState mixed = QuantumState::mixed(cw.density());
    CHECK(fidelity(mixed, cw) == doctest::Approx(1.0).epsilon(1e-10));
    const double f = fidelity(fock_state(60, 0), cw);
    CHECK(f > 0.0);
    CHECK(f < 1.0);
    CHECK_THROWS_AS(fidelity(cw, mixed), ContractViolation);
    CHECK_THROWS_AS(fidelity(fock_state(50, 0), cw), ShapeMismatch);

    // Uhlmann fidelity reduces to the pure-target form and is symmetric.
    Matrix rho = 0.7 * cw.density() + 0.3 * fock_state(60, 3).density();
    const QuantumState r = QuantumState::mixed(rho);
    CHECK(uhlmann_fidelity(r, cw) == doctest::Approx(fidelity(r, cw)).epsilon(1e-12));
    CHECK(uhlmann_fidelity(r, r) == doctest::Approx(1.0).epsilon(1e-8));
    const QuantumState s = QuantumState::mixed(0.5 * fock_state(60, 0).density() + 0.5 * fock_state(60, 3).density());
    CHECK(uhlmann_fidelity(r, s) == doctest::Approx(uhlmann_fidelity(s, r)).epsilon(1e-8));
}

TEST_CASE("state invariants") {
    Vector v = Vector::Zero(4);
    v(0) = 2.0;
    CHECK_THROWS_AS(QuantumState::pure(v), ContractViolation);
    Matrix rho = Matrix::Zero(3, 3);
    rho(0, 0) = 1.5;
    rho(1, 1) = -0.5;
    CHECK_THROWS_AS(QuantumState::mixed(rho), ContractViolation);
    rho(1, 1) = 0.0;
    CHECK_THROWS_AS(QuantumState::mixed(rho), ContractViolation);
    const QuantumState c = coherent_state(40, cplx(2.0, 0.0));
    CHECK(c.expectation(fock::Oscillator(40).number()) == doctest::Approx(4.0).epsilon(1e-9));
}

TEST_CASE("wigner function of simple states") {
    const PhaseGrid g = PhaseGrid::square(4.0, 81);
    const WignerMap vac = wigner(fock_state(40, 0), g);
    double err = 0.0;
    for (int i = 0; i < g.np; ++i)
        for (int j = 0; j < g.nx; ++j) {
            const double x = vac.x[j], p = vac.p[i];
            err = std::max(err, std::abs(vac.at(i, j) - std::exp(-x * x - p * p) / pi));
        }
    CHECK(err <= 1e-6);
    CHECK(vac.normalization == doctest::Approx(1.0).epsilon(1e-3));
    CHECK_FALSE(vac.exceeds_validity);

    const WignerMap one = wigner(fock_state(40, 1), g);
    CHECK(std::abs(one.at(40, 40) + 1.0 / pi) <= 1e-6);

    const WignerMap wide = wigner(fock_state(10, 0), PhaseGrid::square(7.0, 15));
    CHECK(wide.exceeds_validity);
}

TEST_CASE("wigner marginal recovers the position density") {
    const QuantumState cw = build_codeword(60, GkpParams::qubit(0.25), 0);
    const PhaseGrid g = PhaseGrid::square(10.0, 401);
    const WignerMap w = wigner(cw, g);
    const auto marginal = w.x_marginal();
    const auto density = position_density(cw, w.x);
    double err = 0.0;
    for (std::size_t j = 0; j < density.size(); ++j) err = std::max(err, std::abs(marginal[j] - density[j]));
    CHECK(err <= 1e-4);
    CHECK(w.normalization == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("wigner csv export") {
    const auto dir = std::filesystem::temp_directory_path() / "gridstab_test_wigner";
    std::filesystem::create_directories(dir);
    const auto path = (dir / "vac.csv").string();
    const WignerMap w = wigner(fock_state(20, 0), PhaseGrid{-1.0, 1.0, 3, -2.0, 2.0, 5});
    write_wigner_csv(path, w, {0.15, std::sqrt(pi), "vacuum"});
    std::ifstream in(path);
    std::string header;
    std::getline(in, header);
    CHECK(header == "p\\x,-1,0,1");
    int rows = 0;
    for (std::string line; std::getline(in, line);) ++rows;
    CHECK(rows == 5);
    std::ifstream js((dir / "vac.json").string());
    const auto meta = nlohmann::json::parse(js);
    CHECK(meta["dim"] == 20);
    CHECK(meta["label"] == "vacuum");
    CHECK(meta.contains("normalization"));
}
