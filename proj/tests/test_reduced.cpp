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
#include <random>

#include <doctest.h>

#include "gridstab/reduced.hpp"

using namespace gridstab;
using namespace gridstab::reduced;
using std::numbers::pi;

TEST_CASE("sigma from physical parameters") {
    const auto p = ReducedParams::from_physical(0.15, std::sqrt(pi));
    const double x = 2 * 0.15 * std::sqrt(pi);
    CHECK(std::abs(p.sigma - x / (1 + x)) <= 1e-12);
    CHECK(p.sigma == doctest::Approx(0.3471).epsilon(1e-3));
    CHECK(generator_sigma(0.15, std::sqrt(pi)) == doctest::Approx(0.2100).epsilon(1e-3));
    CHECK_THROWS_AS(ReducedParams::from_sigma(0.0), InvalidParameter);
    CHECK_THROWS_AS(ReducedParams::from_sigma(2.0), InvalidParameter);
    CHECK_THROWS_AS(build_problem(ReducedParams::from_sigma(0.3), 63), InvalidDimension);
}

TEST_CASE("assembled matrices") {
    const SpectralProblem pr = build_problem(ReducedParams::from_sigma(0.3), 256);
    CHECK(pr.symmetry_residual() <= 1e-12);
    // constants carry no energy
    CHECK(pr.stiffness.row(0).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(pr.eigenvalues(0) <= 1e-8 * pr.eigenvalues(1));
    CHECK(pr.retained > 0);
    CHECK(pr.warning.empty());
    // eigen-residual of the constant function
    const Eigen::VectorXd c = pr.constant_coefficients();
    CHECK((pr.stiffness * c).norm() <= 1e-10);
}

TEST_CASE("stiffness at sigma = 1") {
    const SpectralProblem pr = build_problem(ReducedParams::from_sigma(1.0), 128);
    CHECK_FALSE(pr.warning.empty());
    // basis rows: 0 -> 1, 1 -> cos, 2 -> sin
    CHECK(std::abs(pr.stiffness(2, 2) - pi) <= 1e-12);
    CHECK(std::abs(pr.mass(2, 2) - pi) <= 1e-12);  // w == 1
}

TEST_CASE("spectral gap is positive below one half") {
    for (double s : {0.1, 0.2, 0.3, 0.4, 0.49}) {
        const GapStudy st = converged_gap(ReducedParams::from_sigma(s));
        CHECK(st.converged);
        CHECK(st.lambda1 > 0.0);
        CHECK(st.relative_change <= 1e-3);
    }
}

TEST_CASE("gap of the standard pencil is one minus sigma") {
    // Reference values from a separate periodic-only Fourier solve with an
    // eigh-based pencil at 2048 points: 0.9, 0.8, 0.7000002.
    for (double s : {0.1, 0.2, 0.3}) {
        const double l1 = spectral_gap(build_problem(ReducedParams::from_sigma(s), 512));
        CHECK(l1 == doctest::Approx(1.0 - s).epsilon(1e-5));
    }
}

TEST_CASE("Rayleigh quotients and weighted means") {
    const SpectralProblem pr = build_problem(ReducedParams::from_sigma(0.35), 256);
    const double l1 = spectral_gap(pr);
    const Eigen::VectorXd one = pr.constant_coefficients();
    const double m11 = one.dot(pr.mass * one);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> g;
    const int periodic = 1 + 2 * pr.modes;
    for (int trial = 0; trial < 20; ++trial) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(pr.basis_size());
        for (int i = 1; i < periodic; ++i) c(i) = g(rng) / (1.0 + i / 2);
        c -= (one.dot(pr.mass * c) / m11) * one;
        CHECK(pr.rayleigh_quotient(c) >= l1 * (1 - 1e-8));
    }
    for (int k = 1; k < 6; ++k) CHECK(std::abs(pr.weighted_integral(pr.eigenvectors.col(k))) <= 1e-8);
}

TEST_CASE("predicted rate") {
    const double eta = std::sqrt(pi);
    CHECK(predicted_rate(0.15, eta, 1.0) == doctest::Approx(0.4073).epsilon(1e-3));
    CHECK(predicted_rate(1e-6, eta, 0.7) == doctest::Approx(1e-6 * eta * 0.7).epsilon(1e-5));
    CHECK(predicted_rate(0.0, eta, 0.7) == 0.0);
}

TEST_CASE("Hardy inequality") {
    CHECK(hardy_constant(0.25) == doctest::Approx(0.32653).epsilon(1e-4));
    const auto zero = hardy_sides(0.25, HardySide::Plus, [](double) { return 0.0; }, [](double) { return 0.0; });
    CHECK(zero.lhs == 0.0);
    CHECK(zero.rhs == 0.0);
    for (double s : {0.1, 0.25, 0.4}) {
        const HardyReport rep = verify_hardy(ReducedParams::from_sigma(s), 100);
        CHECK(rep.tests == 200);
        CHECK(rep.violations.empty());
        CHECK(rep.max_ratio > 0.0);
        CHECK(rep.max_ratio <= 1.0);
    }
}

TEST_CASE("weights on I2") {
    for (double s : {0.2, 0.49}) {
        const WeightBounds b = weight_bounds_on_i2(s);
        CHECK(b.w_min == doctest::Approx(1.0));
        CHECK(b.w_max == doctest::Approx(std::pow(2.0, 1 / s - 1)));
        CHECK(b.w2_min == doctest::Approx(1.0));
        CHECK(b.w2_max == doctest::Approx(std::pow(2.0, 1 / s)));
    }
}

TEST_CASE("weighted mean of cos") {
    // (1+cos)^a: mean of cos is a / (a + 1) with a = 1/sigma - 1
    for (double s : {0.2, 0.35}) {
        const double a = 1 / s - 1;
        CHECK(weighted_mean(s, [](double t) { return std::cos(t); }) == doctest::Approx(a / (a + 1)).epsilon(1e-10));
    }
}

TEST_CASE("gap table csv") {
    const auto path = std::filesystem::temp_directory_path() / "gridstab_gap.csv";
    write_gap_table(path.string(), {{0.3, 0.7, NAN, 1024, true}});
    std::ifstream in(path);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "sigma,lambda1,gamma,n_grid,converged");
    CHECK(row == "0.3,0.7,nan,1024,true");
}
