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

namespace fiberq {
namespace {

Mat4c random_state(Rng &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Mat4c g;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) g(i, j) = Complex(n(rng), n(rng));
    const Mat4c m = g * g.adjoint();
    return m / m.trace().real();
}

void expect_valid(const DensityMatrix2Q &rho) {
    const Mat4c &m = rho.matrix();
    EXPECT_LT((m - m.adjoint()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_NEAR(m.trace().real(), 1.0, 1e-10);
    Eigen::SelfAdjointEigenSolver<Mat4c> es(m);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
}

double qubit_fidelity(const Mat2c &rho, const Mat2c &sigma) { return uhlmann_fidelity(rho, sigma); }

TEST(DensityMatrix, RejectsUnphysical) {
    Mat4c m = Mat4c::Identity() / 2.0;
    EXPECT_THROW(DensityMatrix2Q{m}, Error);
    Mat4c neg = Mat4c::Zero();
    neg(0, 0) = 1.5;
    neg(1, 1) = -0.5;
    EXPECT_THROW(DensityMatrix2Q{neg}, Error);
}

TEST(DensityMatrix, ReducedStatesOfBellAreMixed) {
    const auto rho = DensityMatrix2Q::pure(bell::psi_plus());
    EXPECT_LT((rho.reduced_first() - Mat2c::Identity() / 2.0).norm(), 1e-12);
    EXPECT_LT((rho.reduced_second() - Mat2c::Identity() / 2.0).norm(), 1e-12);
    EXPECT_NEAR(rho.purity(), 1.0, 1e-12);
    EXPECT_NEAR(rho.trace_distance(DensityMatrix2Q::maximally_mixed()), 0.75, 1e-12);
}

TEST(SpdcSource, ZeroPhaseIsPsiPlus) {
    EXPECT_LT((spdc_ket(0.0) - bell::psi_plus()).norm(), 1e-15);
    const auto rho = spdc_state(SpdcSource{});
    EXPECT_NEAR(rho.fidelity(bell::psi_plus()), 1.0, 1e-12);
    EXPECT_NEAR(spdc_state(SpdcSource{M_PI, 1e3, 0.0}).fidelity(bell::psi_minus()), 1.0, 1e-12);
}

TEST(SpdcSource, FullNoiseIsMaximallyMixed) {
    const auto rho = spdc_state(SpdcSource{0.0, 1e3, 1.0});
    for (const Vec4c &b : {bell::phi_plus(), bell::phi_minus(), bell::psi_plus(), bell::psi_minus()})
        EXPECT_NEAR(rho.fidelity(b), 0.25, 1e-12);
}

TEST(SpdcSource, NoiseForMeasuredFidelity) {
    const double p = white_noise_for_fidelity(0.836);
    EXPECT_NEAR(p, 0.2187, 1e-4);
    EXPECT_NEAR(spdc_state(SpdcSource{0.0, 1e3, p}).fidelity(bell::psi_plus()), 0.836, 1e-12);
}

TEST(SpdcSource, FidelityFallsLinearlyWithNoise) {
    double prev = 1.1;
    for (int k = 0; k <= 20; ++k) {
        const double p = k / 20.0;
        const double f = spdc_state(SpdcSource{0.0, 1e3, p}).fidelity(bell::psi_plus());
        EXPECT_NEAR(f, 1.0 - 0.75 * p, 1e-12);
        EXPECT_LT(f, prev);
        prev = f;
    }
    EXPECT_THROW(spdc_state(SpdcSource{0.0, 1e3, 1.2}), Error);
}

TEST(ArmB, IdentityChannel) {
    Rng rng(1);
    for (int i = 0; i < 20; ++i) {
        const DensityMatrix2Q rho(random_state(rng));
        const auto out = apply_channel_arm_b(rho, ChannelState{});
        EXPECT_LT((out.rho.matrix() - rho.matrix()).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_NEAR(out.success_prob, 1.0, 1e-12);
    }
}

TEST(ArmB, RotationMatchesDenseOracle) {
    Rng rng(2);
    const auto psi = bell::psi_plus();
    for (int i = 0; i < 100; ++i) {
        const PolRotation r = random_rotation(rng);
        ChannelState ch;
        ch.drift().set_rotation(r);
        const auto out = apply_channel_arm_b(DensityMatrix2Q::pure(psi), ch);
        const Vec4c rotated = kron(Mat2c(Mat2c::Identity()), r.su2()) * psi;
        EXPECT_NEAR(out.rho.fidelity(psi), std::norm(psi.dot(rotated)), 1e-12);
        expect_valid(out.rho);
    }
}

TEST(ArmB, SmallPdlBarelyMatters) {
    ChannelState ch;
    ch.set_pdl(PdlElement::from_db(Vec3(0.2, 0.9, -0.4), 0.08));
    const auto out = apply_channel_arm_b(DensityMatrix2Q::pure(bell::psi_plus()), ch);
    EXPECT_GT(out.rho.fidelity(bell::psi_plus()), 0.99);
    const double t = amplitude_transmission_from_db(0.08);
    EXPECT_NEAR(out.success_prob, (1 + t * t) / 2, 1e-12);
}

TEST(ArmB, FullyExtinguished) {
    const Vec4c hh = kron(ket_h(), ket_v());
    PdlElement polarizer(Vec3::UnitX(), 0.0);
    try {
        apply_operator_arm_b(DensityMatrix2Q::pure(hh), polarizer.operator_matrix());
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::FullyExtinguished);
    }
}

TEST(Absorption, IdealPairGivesTargetState) {
    const auto out = heralded_absorption(spdc_state(SpdcSource{}), IonMemory{});
    EXPECT_NEAR(out.fidelity(ion_photon_target()), 1.0, 1e-12);
    // R -> |-1/2> = |0>, L -> |+1/2> = |1>.
    EXPECT_LT((absorption_map() * ket_r() - Vec2c(1, 0)).norm(), 1e-12);
    EXPECT_LT((absorption_map() * ket_l() - Vec2c(0, 1)).norm(), 1e-12);
}

TEST(Absorption, MixedStaysMixed) {
    const auto out = heralded_absorption(DensityMatrix2Q::maximally_mixed(), IonMemory{400e-6, 1e4});
    EXPECT_LT((out.matrix() - Mat4c::Identity() / 4.0).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Absorption, CalibratedNoiseGivesSeventyNinePercent) {
    const SpdcSource src{0.0, 1e3, 0.2187};
    const IonMemory ion{400e-6, kCalibratedIonDephasing};
    const auto out = heralded_absorption(spdc_state(src), ion);
    expect_valid(out);
    EXPECT_NEAR(out.fidelity(ion_photon_target()), 0.79, 0.02);
    EXPECT_THROW(heralded_absorption(spdc_state(src), IonMemory{400e-6, -1.0}), Error);
}

TEST(Teleport, IdealResourcesAllCardinalStates) {
    const auto pair = spdc_state(SpdcSource{});
    for (const auto &s : {StokesVector::H(), StokesVector::V(), StokesVector::D(), StokesVector::A(),
                          StokesVector::R(), StokesVector::L()}) {
        const Mat2c in = density_from_stokes(s);
        const auto br = teleport_branches(in, pair, IonMemory{});
        for (const auto &b : br) {
            const Mat2c out = photon_to_logical(b.photon);
            const Mat2c c = herald_correction(b.herald);
            EXPECT_NEAR(qubit_fidelity(out, c * in * c.adjoint()), 1.0, 1e-9);
            EXPECT_NEAR(b.probability, 0.25, 1e-12);
        }
    }
}

TEST(Teleport, PhiMinusNeedsNoCorrection) {
    const auto pair = spdc_state(SpdcSource{});
    const Mat2c in = density_from_stokes(StokesVector(0.6, 0.0, 0.8));
    const auto br = teleport_branches(in, pair, IonMemory{});
    const auto &minus = br[0].herald == BsmHerald::PhiMinus ? br[0] : br[1];
    const auto &plus = br[0].herald == BsmHerald::PhiPlus ? br[0] : br[1];
    EXPECT_LT((photon_to_logical(minus.photon) - in).norm(), 1e-9);
    const Mat2c z = stokes_paulis()[0];
    EXPECT_LT((photon_to_logical(plus.photon) - z * in * z).norm(), 1e-9);
}

TEST(Teleport, HeraldProbabilitiesForH) {
    const auto br = teleport_branches(density_from_stokes(StokesVector::H()), spdc_state(SpdcSource{}), IonMemory{});
    EXPECT_NEAR(br[0].probability + br[1].probability, 0.5, 1e-12);
}

TEST(Teleport, HeraldFrequenciesFollowBornRule) {
    Rng rng(3);
    const auto pair = spdc_state(SpdcSource{0.0, 1e3, 0.2});
    const Mat2c in = density_from_stokes(StokesVector::D());
    const IonMemory ion{400e-6, 500.0};
    const auto br = teleport_branches(in, pair, ion);
    const int n = 100000;
    int plus = 0, minus = 0;
    for (int i = 0; i < n; ++i) {
        const auto ev = bsm_teleport(in, pair, ion, rng);
        if (!ev.heralded) continue;
        (ev.herald == BsmHerald::PhiPlus ? plus : minus) += 1;
    }
    for (const auto &[count, p] : {std::pair{plus, br[0].probability}, std::pair{minus, br[1].probability}}) {
        const double sd = std::sqrt(n * p * (1 - p));
        EXPECT_NEAR(count, n * p, 3 * sd);
    }
}

TEST(Teleport, CalibratedNoiseProcessFidelity) {
    const auto pair = spdc_state(SpdcSource{0.0, 1e3, 0.2187});
    const IonMemory ion{400e-6, kCalibratedIonDephasing};
    for (BsmHerald h : {BsmHerald::PhiPlus, BsmHerald::PhiMinus}) {
        const auto chi = teleport_process(pair, ion, h);
        const double f = teleport_process_fidelity(chi, h);
        EXPECT_GE(f, 0.70);
        EXPECT_LE(f, 0.95);
        EXPECT_NEAR(chi.trace(), 1.0, 1e-12);
        Eigen::SelfAdjointEigenSolver<Mat4c> es(chi.chi);
        EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
    }
}

TEST(ProcessTomography, IdentityAndSigmaZ) {
    const auto id = process_tomography([](const Mat2c &r) { return r; });
    EXPECT_NEAR(id.element(0), 1.0, 1e-9);
    EXPECT_LT((id.chi - Mat4c(Mat4c::Zero())).cwiseAbs().sum() - 1.0, 1e-9);
    const Mat2c z = process_basis()[3];
    const auto zz = process_tomography([&](const Mat2c &r) { return Mat2c(z * r * z); });
    EXPECT_NEAR(zz.element(3), 1.0, 1e-9);
    EXPECT_NEAR(zz.element(0), 0.0, 1e-9);
}

TEST(ProcessTomography, IdealTeleportBranches) {
    const auto pair = spdc_state(SpdcSource{});
    EXPECT_NEAR(teleport_process(pair, IonMemory{}, BsmHerald::PhiMinus).element(0), 1.0, 1e-9);
    EXPECT_NEAR(teleport_process(pair, IonMemory{}, BsmHerald::PhiPlus).element(3), 1.0, 1e-9);
}

TEST(ProcessTomography, ReproducesRandomChannels) {
    Rng rng(4);
    for (int i = 0; i < 50; ++i) {
        const Mat2c u = random_rotation(rng).su2();
        const double c = 0.7;
        auto channel = [&](const Mat2c &r) { return Mat2c(dephase_qubit(u * r * u.adjoint(), c)); };
        const auto chi = process_tomography(channel);
        for (int k = 0; k < 5; ++k) {
            const Mat2c in = density_from_stokes(random_pure_stokes(rng));
            EXPECT_LT((chi.apply(in) - channel(in)).norm(), 1e-9);
        }
    }
}

TEST(ProcessTomography, IncompleteInputs) {
    const std::vector<Mat2c> two{density_from_stokes(StokesVector::H()), density_from_stokes(StokesVector::V())};
    try {
        process_tomography([](const Mat2c &r) { return r; }, two);
        FAIL();
    } catch (const Error &e) {
        EXPECT_EQ(e.code(), ErrorCode::SingularDesign);
    }
}

}  // namespace
}  // namespace fiberq
