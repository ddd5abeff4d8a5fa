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

#pragma once

// Measurement and actuation hardware: polarimeter, piezo polarization
// controller, waveplate/Wollaston projection setups, reference lasers and
// single-photon detectors.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "fiberq/errors.hpp"
#include "fiberq/linalg.hpp"
#include "fiberq/polcore.hpp"

namespace fiberq {

// ---------------------------------------------------------------------------
// Polarimeter

struct Polarimeter {
    double sigma = 0.0;         ///< per-component Gaussian noise
    double latency_s = 0.045;   ///< one Stokes read-out
};

/// Noisy read-out of a Stokes vector; the result is rescaled onto the sphere
/// when noise pushes it outside. Fully polarized inputs are always read back
/// on the sphere (degree of polarization 1), which keeps the read-out bias at
/// O(sigma^2) instead of the O(sigma) of one-sided clipping.
template <class Generator>
StokesVector polarimeter_read(const Polarimeter &p, const StokesVector &s_true, Generator &rng) {
    if (!s_true.is_physical(1e-9)) throw Error(ErrorCode::InvalidArgument, "Stokes vector outside the sphere");
    if (p.sigma == 0.0) return s_true;
    std::normal_distribution<double> noise(0.0, p.sigma);
    Vec3 v = s_true.v;
    for (int k = 0; k < 3; ++k) v[k] += noise(rng);
    const double n = v.norm();
    if (n > 1.0 || s_true.is_pure(1e-9)) v /= n;
    return StokesVector(v);
}

// ---------------------------------------------------------------------------
// Piezo polarization controller

inline constexpr int kPiezoChannels = 4;
using Voltages = Eigen::Vector4d;

/// Four fiber squeezers. Channel i rotates the Poincare sphere by
/// gain_i * U_i about its fixed axis; channel 1 acts first. The default
/// squeezers sit at 0, 45, 0, 45 degrees in the lab frame, i.e. they rotate
/// about the S1 (H) and S2 (D) axes alternately.
struct PiezoController {
    Voltages voltages = Voltages::Zero();
    std::array<Vec3, kPiezoChannels> axes{Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitY()};
    Eigen::Vector4d gains = Eigen::Vector4d::Constant(0.5);  ///< rad/V
    double u_min = -10.0;
    double u_max = 10.0;

    bool in_range(const Voltages &u) const {
        return (u.array() >= u_min - 1e-12).all() && (u.array() <= u_max + 1e-12).all();
    }

    /// Voltage that rotates channel i by a full turn.
    double full_turn_voltage(int i) const { return 2.0 * std::numbers::pi / std::abs(gains[i]); }
};

inline void check_piezo(const PiezoController &c) {
    for (int i = 0; i < kPiezoChannels; ++i) {
        if (!std::isfinite(c.gains[i]) || c.gains[i] == 0.0)
            throw Error(ErrorCode::InvalidArgument, "piezo gains must be finite and nonzero");
        if (!(c.axes[i].norm() > 0.0)) throw Error(ErrorCode::InvalidArgument, "piezo axis must be nonzero");
    }
    if (!(c.u_min < c.u_max)) throw Error(ErrorCode::InvalidArgument, "piezo limits are empty");
}

inline PolRotation piezo_rotation(const PiezoController &c, const Voltages &u) {
    if (!c.in_range(u)) throw Error(ErrorCode::VoltageOutOfRange, "piezo voltage outside limits");
    PolRotation r;
    for (int i = 0; i < kPiezoChannels; ++i) r = PolRotation::axis_angle(c.axes[i], c.gains[i] * u[i]) * r;
    return r;
}

inline PolRotation piezo_rotation(const PiezoController &c) { return piezo_rotation(c, c.voltages); }

// ---------------------------------------------------------------------------
// Waveplates and projection

/// A waveplate with fast axis at lab angle theta and retardance delta rotates
/// the Poincare sphere by delta about (cos 2 theta, sin 2 theta, 0).
inline PolRotation waveplate_rotation(double fast_axis_angle, double retardance) {
    return PolRotation::axis_angle(Vec3(std::cos(2 * fast_axis_angle), std::sin(2 * fast_axis_angle), 0.0),
                                   retardance);
}

struct WaveplateAngles {
    double quarter = 0.0;
    double half = 0.0;
};

inline double wrap_half_turn(double a) {
    a = std::fmod(a, std::numbers::pi);
    if (a < 0) a += std::numbers::pi;
    if (a >= std::numbers::pi) a = 0.0;
    return a;
}

/// Waveplate angles that send the analysis axis to H (port 1 of the prism).
///
/// Writing the axis as (cos 2chi cos 2psi, cos 2chi sin 2psi, sin 2chi), a
/// quarter-wave plate at psi maps it onto the linear state at azimuth
/// psi - chi, and a half-wave plate at (psi - chi)/2 maps that onto H.
inline WaveplateAngles waveplate_angles_for_axis(const Vec3 &axis) {
    const Vec3 a = axis.normalized();
    const double chi = 0.5 * std::asin(std::clamp(a[2], -1.0, 1.0));
    const double psi = (std::hypot(a[0], a[1]) < 1e-15) ? 0.0 : 0.5 * std::atan2(a[1], a[0]);
    return {wrap_half_turn(psi), wrap_half_turn((psi - chi) / 2.0)};
}

/// Combined Stokes rotation of quarter- then half-wave plate.
inline PolRotation analyzer_rotation(const WaveplateAngles &w) {
    return waveplate_rotation(w.half, std::numbers::pi) * waveplate_rotation(w.quarter, std::numbers::pi / 2);
}

struct Detector {
    double efficiency = 1.0;
    double dark_rate_per_s = 0.0;
    double jitter_sigma_s = 0.0;

    static Detector snspd() { return {0.8, 5.0, 50e-12}; }
    static Detector apd() { return {0.6, 25.0, 350e-12}; }
};

inline void check_detector(const Detector &d) {
    if (!(d.efficiency >= 0.0 && d.efficiency <= 1.0) || !(d.dark_rate_per_s >= 0.0) || !(d.jitter_sigma_s >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "detector parameters out of range");
}

/// Quarter- and half-wave plate followed by a Wollaston prism. Port 1 takes
/// the analysis axis, port 2 the orthogonal state.
struct ProjectionSetup {
    WaveplateAngles angles;
    Detector port1;
    Detector port2;

    static ProjectionSetup for_axis(const Vec3 &axis, Detector d1 = {}, Detector d2 = {}) {
        return {waveplate_angles_for_axis(axis), d1, d2};
    }

    /// Analysis axis selected by the current waveplate angles.
    Vec3 analysis_axis() const { return analyzer_rotation(angles).matrix().transpose() * Vec3::UnitX(); }

    /// Port-1 projector |a><a|.
    Mat2c projector(int port) const {
        const Vec3 a = analysis_axis();
        return density_from_stokes(StokesVector(port == 1 ? a : Vec3(-a)));
    }
};

struct PortProbabilities {
    double p1 = 0.0;
    double p2 = 0.0;
};

/// Port probabilities for a single-qubit state, evaluated through the
/// waveplate rotation and an H/V prism.
inline PortProbabilities port_probabilities(const ProjectionSetup &ps, const StokesVector &s) {
    const StokesVector out = analyzer_rotation(ps.angles).apply(s);
    const double p1 = 0.5 * (1.0 + out[0]);
    return {p1, 1.0 - p1};
}

struct PortCounts {
    std::uint64_t port1 = 0;
    std::uint64_t port2 = 0;
};

template <class Generator>
std::uint64_t poisson_count(double mean, Generator &rng) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> d(mean);
    return d(rng);
}

/// Counts in both ports for `photon_rate` photons/s of state s during
/// `integration_s`: mean_k = rate * p_k * eff_k * t + dark_k * t.
template <class Generator>
PortCounts project_and_count(const ProjectionSetup &ps, const StokesVector &s, double photon_rate,
                             double integration_s, Generator &rng) {
    if (!(integration_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "integration time must be positive");
    check_detector(ps.port1);
    check_detector(ps.port2);
    const auto p = port_probabilities(ps, s);
    const double m1 = (photon_rate * p.p1 * ps.port1.efficiency + ps.port1.dark_rate_per_s) * integration_s;
    const double m2 = (photon_rate * p.p2 * ps.port2.efficiency + ps.port2.dark_rate_per_s) * integration_s;
    return {poisson_count(m1, rng), poisson_count(m2, rng)};
}

inline Mat2c single_qubit_projector(const ProjectionSetup &ps, int port) { return ps.projector(port); }

/// Joint port probabilities P(k, l) for a two-qubit state (A analyzed by
/// `a`, B by `b`).
inline Eigen::Matrix2d pair_port_probabilities(const ProjectionSetup &a, const ProjectionSetup &b,
                                               const Mat4c &rho) {
    Eigen::Matrix2d p;
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            const Mat4c proj = kron(a.projector(k + 1), b.projector(l + 1));
            p(k, l) = (proj * rho).trace().real();
        }
    return p;
}

/// Coincidence counts for `pair_rate` pairs/s in state rho, plus an
/// accidental rate per port combination.
template <class Generator>
std::array<std::array<std::uint64_t, 2>, 2> project_and_count_pair(const ProjectionSetup &a,
                                                                   const ProjectionSetup &b, const Mat4c &rho,
                                                                   double pair_rate, double integration_s,
                                                                   Generator &rng,
                                                                   double accidental_rate_per_s = 0.0) {
    if (!(integration_s > 0.0)) throw Error(ErrorCode::InvalidArgument, "integration time must be positive");
    const auto p = pair_port_probabilities(a, b, rho);
    const std::array<const Detector *, 2> da{&a.port1, &a.port2}, db{&b.port1, &b.port2};
    std::array<std::array<std::uint64_t, 2>, 2> out{};
    for (int k = 0; k < 2; ++k)
        for (int l = 0; l < 2; ++l) {
            const double mean = (pair_rate * p(k, l) * da[k]->efficiency * db[l]->efficiency +
                                 accidental_rate_per_s) * integration_s;
            out[k][l] = poisson_count(mean, rng);
        }
    return out;
}

// ---------------------------------------------------------------------------
// Reference lasers

enum class ReferenceLaser { H, D };

inline StokesVector reference_switch(ReferenceLaser next) {
    return next == ReferenceLaser::H ? StokesVector::H() : StokesVector::D();
}

/// Timing of the stabilization hardware. One error-function evaluation is one
/// measure-feedback cycle; each gradient iteration adds laser switching and
/// computation overhead, so that a default iteration (9 cycles) takes 1.1 s.
struct TimingModel {
    double feedback_cycle_s = 0.09;
    double iteration_overhead_s = 0.29;
    double laser_switch_s = 0.02;  ///< part of the overhead; kept for reporting
};

}  // namespace fiberq
