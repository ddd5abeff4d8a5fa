// Copyright 2026 The fiberq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "fiberq/quantum.hpp"
#include "fiberq/tomography.hpp"

namespace fiberq {
namespace {

DensityMatrix2Q random_state(Rng &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat4c g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = Complex(n(rng), n(rng));
    return DensityMatrix2Q::normalized(g * g.adjoint());
}

DensityMatrix2Q werner(double fidelity) {
    return spdc_state(SpdcSource{0.0, 1.0, white_noise_for_fidelity(fidelity)});
}

TEST(Tomography2q, ExactPsiPlus) {
    const auto table = expected_counts(DensityMatrix2Q::pure(bell::psi_plus()), standard_tomography_bases(), 1e4);
    EXPECT_GE(tomography_2q(table).fidelity(bell::psi_plus()), 0.9999);
}

TEST(Tomography2q, ExactMaximallyMixed) {
    const auto mixed = DensityMatrix2Q::maximally_mixed();
    const auto table = expected_counts(mixed, standard_tomography_bases(), 1e4);
    EXPECT_LT(tomography_2q(table).trace_distance(mixed), 1e-6);
}

TEST(Tomography2q, RoundTripRandomStates) {
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
        const auto rho = random_state(rng);
        const auto table = expected_counts(rho, standard_tomography_bases(2.0), 5e3);
        EXPECT_GE(tomography_2q(table).fidelity(rho), 0.9999);
    }
}

TEST(Tomography2q, RoundTripPureStatesAndMl) {
    Rng rng(2);
    TomographyOptions ml;
    ml.maximum_likelihood = true;
    for (int i = 0; i < 20; ++i) {
        std::normal_distribution<double> n(0.0, 1.0);
        Vec4c psi(Complex(n(rng), n(rng)), Complex(n(rng), n(rng)), Complex(n(rng), n(rng)), Complex(n(rng), n(rng)));
        psi.normalize();
        const auto table = expected_counts(DensityMatrix2Q::pure(psi), standard_tomography_bases(), 1e4);
        EXPECT_GE(tomography_2q(table).fidelity(psi), 0.9999);
        EXPECT_GE(tomography_2q(table, ml).fidelity(psi), 0.9999);
    }
}

TEST(Tomography2q, PoissonCountsWithinMonteCarloError) {
    Rng rng(3);
    const auto truth = werner(0.98);
    // 10^4 pairs per setting.
    const auto expected = expected_counts(truth, standard_tomography_bases(1.0), 1e4);
    const auto counts = poisson_resample(expected, rng);
    const auto mc = mc_uncertainty(counts, 200, bell::psi_plus(), rng);
    EXPECT_FALSE(mc.degenerate);
    EXPECT_NEAR(mc.point_fidelity, 0.98, 3 * mc.sigma_fidelity);
}

TEST(Tomography2q, Errors) {
    auto table = standard_tomography_bases();
    table.resize(9);
    for (auto &r : table) r.counts = 10;
    try {
        tomography_2q(table);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularDesign);
    }
    EXPECT_FALSE(informationally_complete(table));
    auto neg = expected_counts(werner(0.9), standard_tomography_bases(), 100);
    neg[3].counts = -1;
    EXPECT_THROW(tomography_2q(neg), Error);
    EXPECT_THROW(basis_stokes('X'), Error);
}

TEST(Tomography2q, OverCompleteSixStateBases) {
    TomographyTable t;
    for (char a : {'H', 'V', 'D', 'A', 'R', 'L'})
        for (char b : {'H', 'V', 'D', 'A', 'R', 'L'}) t.push_back({a, b, 0.0, 1.0});
    const auto rho = werner(0.9);
    EXPECT_GE(tomography_2q(expected_counts(rho, t, 1e4)).fidelity(rho), 0.9999);
}

TEST(McUncertainty, DegenerateDesignIsFlagged) {
    Rng rng(4);
    auto table = standard_tomography_bases();
    table[1].counts = 500;  // only HV
    const auto mc = mc_uncertainty(table, 100, bell::psi_plus(), rng);
    EXPECT_TRUE(mc.degenerate);
    EXPECT_THROW(mc_uncertainty(table, 50, bell::psi_plus(), rng), Error);
}

TEST(McUncertainty, DeterministicGivenSeed) {
    Rng a(5), b(5);
    const auto t = expected_counts(werner(0.9), standard_tomography_bases(), 1e3);
    EXPECT_EQ(mc_uncertainty(t, 100, bell::psi_plus(), a).sigma_fidelity,
              mc_uncertainty(t, 100, bell::psi_plus(), b).sigma_fidelity);
}

TEST(McUncertainty, MeanNearPointEstimate) {
    Rng rng(6);
    const auto t = poisson_resample(expected_counts(werner(0.9), standard_tomography_bases(), 1e4), rng);
    const auto mc = mc_uncertainty(t, 300, bell::psi_plus(), rng);
    EXPECT_NEAR(mc.mean_fidelity, mc.point_fidelity, mc.sigma_fidelity);
    EXPECT_EQ(mc.resamples, 300);
}

TEST(McUncertainty, SigmaScalesAsInverseSqrtCounts) {
    Rng rng(7);
    std::vector<double> x, y;
    for (double n : {1e3, 3e3, 1e4, 3e4, 1e5}) {
        const auto t = expected_counts(werner(0.9), standard_tomography_bases(), n);
        const auto mc = mc_uncertainty(t, 400, bell::psi_plus(), rng);
        x.push_back(std::log(16 * n));
        y.push_back(std::log(mc.sigma_fidelity));
    }
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) mx += x[i] / x.size(), my += y[i] / y.size();
    double sxy = 0, sxx = 0;
    for (size_t i = 0; i < x.size(); ++i) sxy += (x[i] - mx) * (y[i] - my), sxx += (x[i] - mx) * (x[i] - mx);
    EXPECT_NEAR(sxy / sxx, -0.5, 0.05);
}

TEST(BackgroundCorrection, ZeroBackgroundUnchanged) {
    const auto t = expected_counts(werner(0.9), standard_tomography_bases(), 1e3);
    const auto c = background_correction(t, 0.0, 0.0, 1e-8);
    for (size_t k = 0; k < t.size(); ++k) EXPECT_DOUBLE_EQ(c[k].counts, t[k].counts);
    EXPECT_THROW(background_correction(t, -1.0, 0.0, 1e-8), Error);
}

TEST(BackgroundCorrection, ClampsAtZero) {
    auto t = standard_tomography_bases(10.0);
    t[0].counts = 3;
    const auto c = background_correction(t, 1e5, 1e4, 1e-8);
    EXPECT_DOUBLE_EQ(c[0].counts, 0.0);
}

TEST(BackgroundCorrection, RecoversInjectedTruth) {
    Rng rng(8);
    const auto truth = werner(0.95);
    const double sa = 5e4, sb = 2e4, window = 5e-9;
    const double acc = accidental_rate(sa, sb, window);
    EXPECT_NEAR(acc, 5.0, 1e-12);
    const auto counts = poisson_resample(expected_counts(truth, standard_tomography_bases(100.0), 50.0, acc), rng);
    const auto raw = tomography_2q(counts).fidelity(bell::psi_plus());
    const auto corrected = background_correction(counts, sa, sb, window);
    const auto mc = mc_uncertainty(corrected, 300, bell::psi_plus(), rng);
    EXPECT_LT(raw, 0.9);
    EXPECT_NEAR(mc.point_fidelity, 0.95, 3 * mc.sigma_fidelity);
}

TEST(BackgroundCorrection, MeasuredRatesLiftRawFidelity) {
    // Singles and window of the distributed-pair setup; 144.4 pairs/s.
    const double sa = 1.2e5, sb = 8100, window = 10e-9;
    const auto truth = werner(0.98);
    const auto counts =
        expected_counts(truth, standard_tomography_bases(100.0), 144.4, accidental_rate(sa, sb, window));
    const double raw = tomography_2q(counts).fidelity(bell::psi_plus());
    const double corrected = tomography_2q(background_correction(counts, sa, sb, window)).fidelity(bell::psi_plus());
    // Each record gains A accidentals, so a basis pair sees R pairs plus 4A
    // white coincidences.
    const double r = 144.4, a = accidental_rate(sa, sb, window);
    EXPECT_NEAR(raw, (0.98 * r + a) / (r + 4.0 * a), 1e-6);
    EXPECT_LT(raw, 0.84);
    EXPECT_NEAR(corrected, 0.98, 1e-6);
}

TEST(Tomography1q, CardinalCounts) {
    const StokesVector s = tomography_1q({{{100, 0}, {50, 50}, {50, 50}}});
    EXPECT_LT((s.v - Vec3(1, 0, 0)).norm(), 1e-12);
    const StokesVector t = tomography_1q({{{90, 10}, {80, 20}, {95, 5}}});
    EXPECT_LE(t.norm(), 1.0 + 1e-12);
    EXPECT_THROW(tomography_1q({{{0, 0}, {1, 1}, {1, 1}}}), Error);
}

}  // namespace
}  // namespace fiberq
