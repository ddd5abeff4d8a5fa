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

// Polarization calculus on the Poincare sphere.
//
// Stokes convention: (s1, s2, s3) = (H/V, D/A, R/L), so H = (1,0,0),
// D = (0,1,0), R = (0,0,1). For the qubit picture H = |0>, V = |1>,
// D = (|0>+|1>)/sqrt2, R = (|0>+i|1>)/sqrt2, and the Stokes-ordered Pauli
// vector is (sigma_z, sigma_x, sigma_y). That ordering is a cyclic
// permutation of (x, y, z), so rotation handedness is the usual one:
// rho = (1 + s . sigma) / 2 and U = exp(-i theta n.sigma / 2) rotates s by
// +theta about n.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "fiberq/errors.hpp"

namespace fiberq {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Complex = std::complex<double>;
using Mat2c = Eigen::Matrix2cd;
using Vec2c = Eigen::Vector2cd;

inline constexpr double kStokesEps = 1e-12;
inline constexpr double kRotationTol = 1e-10;
inline constexpr double kExtinctionThreshold = 1e-12;

/// Point in (or on) the Poincare sphere. Classical Stokes and qubit Bloch
/// vectors share this type.
struct StokesVector {
    Vec3 v = Vec3::Zero();

    StokesVector() = default;
    StokesVector(double s1, double s2, double s3) : v(s1, s2, s3) {}
    explicit StokesVector(const Vec3 &x) : v(x) {}

    double s1() const { return v[0]; }
    double s2() const { return v[1]; }
    double s3() const { return v[2]; }
    double operator[](int i) const { return v[i]; }
    double norm() const { return v.norm(); }

    bool is_physical(double eps = kStokesEps) const { return v.norm() <= 1.0 + eps; }
    bool is_pure(double eps = kStokesEps) const { return std::abs(v.norm() - 1.0) <= eps; }

    StokesVector normalized() const { return StokesVector(v.normalized()); }

    static StokesVector H() { return {1, 0, 0}; }
    static StokesVector V() { return {-1, 0, 0}; }
    static StokesVector D() { return {0, 1, 0}; }
    static StokesVector A() { return {0, -1, 0}; }
    static StokesVector R() { return {0, 0, 1}; }
    static StokesVector L() { return {0, 0, -1}; }
};

// ---------------------------------------------------------------------------
// Pauli algebra in Stokes order

inline const std::array<Mat2c, 3> &stokes_paulis() {
    static const std::array<Mat2c, 3> paulis = [] {
        const Complex i(0, 1);
        Mat2c sz, sx, sy;
        sz << 1, 0, 0, -1;
        sx << 0, 1, 1, 0;
        sy << 0, -i, i, 0;
        return std::array<Mat2c, 3>{sz, sx, sy};
    }();
    return paulis;
}

/// n . sigma with the Stokes-ordered Pauli vector.
inline Mat2c pauli_dot(const Vec3 &n) {
    const auto &p = stokes_paulis();
    return n[0] * p[0] + n[1] * p[1] + n[2] * p[2];
}

inline Mat2c density_from_stokes(const StokesVector &s) {
    return 0.5 * (Mat2c::Identity() + pauli_dot(s.v));
}

inline StokesVector stokes_from_density(const Mat2c &rho) {
    const auto &p = stokes_paulis();
    const double tr = rho.trace().real();
    Vec3 s;
    for (int k = 0; k < 3; ++k) s[k] = (rho * p[k]).trace().real() / tr;
    return StokesVector(s);
}

/// State vector for a pure Stokes direction; the global phase makes the
/// first nonzero amplitude real and non-negative.
inline Vec2c ket_from_stokes(const StokesVector &s) {
    const Vec3 n = s.v.normalized();
    const double theta = std::acos(std::clamp(n[0], -1.0, 1.0));
    const double phi = std::atan2(n[2], n[1]);
    Vec2c k;
    k << std::cos(theta / 2), std::polar(std::sin(theta / 2), phi);
    return k;
}

// ---------------------------------------------------------------------------
// Rotations

/// Proper rotation of the Poincare sphere (orthogonal, det +1).
class PolRotation {
  public:
    PolRotation() : m_(Mat3::Identity()) {}

    /// Throws InvalidRotation unless m is orthogonal with det +1 within 1e-10.
    explicit PolRotation(const Mat3 &m) : m_(m) {
        if (!is_rotation(m))
            throw Error(ErrorCode::InvalidRotation, "matrix is not a proper rotation");
    }

    static PolRotation identity() { return {}; }

    static PolRotation axis_angle(const Vec3 &axis, double angle) {
        const double n = axis.norm();
        if (n == 0.0) return {};
        return unchecked(Eigen::AngleAxisd(angle, axis / n).toRotationMatrix());
    }

    /// Rotation vector (axis * angle) parametrization.
    static PolRotation from_rotation_vector(const Vec3 &w) {
        return axis_angle(w, w.norm());
    }

    /// SO(3) image of a 2x2 unitary: R_ij = tr(sigma_i U sigma_j U^dag) / 2.
    static PolRotation from_unitary(const Mat2c &u) {
        const auto &p = stokes_paulis();
        const double scale = std::abs(u.determinant());
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                r(i, j) = 0.5 * (p[i] * u * p[j] * u.adjoint()).trace().real() / scale;
        return reproject(r);
    }

    static bool is_rotation(const Mat3 &m, double tol = kRotationTol) {
        if (!m.allFinite()) return false;
        if ((m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
        return std::abs(m.determinant() - 1.0) <= tol;
    }

    /// Nearest rotation (quaternion renormalization), for accumulated
    /// products that drift off SO(3) by rounding.
    static PolRotation reproject(const Mat3 &m) {
        Eigen::Quaterniond q(m);
        q.normalize();
        return unchecked(q.toRotationMatrix());
    }

    const Mat3 &matrix() const { return m_; }
    double trace() const { return m_.trace(); }
    double angle() const { return Eigen::AngleAxisd(m_).angle(); }
    Vec3 axis() const { return Eigen::AngleAxisd(m_).axis(); }

    PolRotation inverse() const { return unchecked(m_.transpose()); }

    /// (a * b) applies b first.
    PolRotation operator*(const PolRotation &other) const {
        Mat3 p = m_ * other.m_;
        if ((p.transpose() * p - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-13) return reproject(p);
        return unchecked(p);
    }

    StokesVector apply(const StokesVector &s) const { return StokesVector(m_ * s.v); }
    StokesVector operator()(const StokesVector &s) const { return apply(s); }

    /// SU(2) lift exp(-i theta n.sigma/2); of the two lifts the one with
    /// non-negative trace is returned.
    Mat2c su2() const {
        const Eigen::AngleAxisd aa(m_);
        const double half = aa.angle() / 2;
        return std::cos(half) * Mat2c::Identity() - Complex(0, 1) * std::sin(half) * pauli_dot(aa.axis());
    }

  private:
    struct Unchecked {};
    PolRotation(const Mat3 &m, Unchecked) : m_(m) {}
    static PolRotation unchecked(const Mat3 &m) { return PolRotation(m, Unchecked{}); }

    Mat3 m_;
};

struct ProcessFidelity {
    double value = 1.0;
};

/// F_P = (1 + tr M) / 4 for a rotation-only channel.
inline ProcessFidelity process_fidelity(const PolRotation &m) {
    return {std::clamp((1.0 + m.trace()) / 4.0, 0.0, 1.0)};
}

inline double fidelity_from_trace(double trace) { return (1.0 + trace) / 4.0; }

/// Trace of the channel rotation from the outputs of the H and D probes:
/// tr [S1, S2, S1 x S2] = S1_1 + S2_2 + S1_1 S2_2 - S1_2 S2_1.
inline double trace_from_probe_pair(const StokesVector &s1_out, const StokesVector &s2_out) {
    if (std::abs(s1_out.norm() - 1.0) > 1e-3 || std::abs(s2_out.norm() - 1.0) > 1e-3)
        throw Error(ErrorCode::NonUnitProbe, "probe output is not a pure polarization state");
    const double a = s1_out[0], b = s1_out[1];
    const double c = s2_out[0], d = s2_out[1];
    return a + d + a * d - b * c;
}

/// Rotation that maps in1 -> out1 and in2 -> out2, from two probe pairs.
///
/// The measured outputs are generally not exactly orthonormal. The estimate
/// is the rotation closest (least squares, Kabsch) to the three
/// correspondences in1 -> out1, in2 -> out2, in1 x in2 -> out1 x out2 after
/// normalizing all vectors, which is exact for noise-free data.
inline PolRotation rotation_from_probe_pairs(const StokesVector &in1, const StokesVector &out1,
                                             const StokesVector &in2, const StokesVector &out2) {
    const Vec3 a1 = in1.v.normalized(), a2 = in2.v.normalized();
    const Vec3 b1 = out1.v.normalized(), b2 = out2.v.normalized();
    if (a1.cross(a2).norm() < 1e-3)
        throw Error(ErrorCode::DegenerateProbes, "input probes are (anti)parallel");
    const Vec3 a3 = a1.cross(a2).normalized();
    const Vec3 b3 = b1.cross(b2).normalized();
    const Mat3 h = b1 * a1.transpose() + b2 * a2.transpose() + b3 * a3.transpose();
    Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
    Mat3 fix = Mat3::Identity();
    fix(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0 ? -1.0 : 1.0;
    return PolRotation::reproject(svd.matrixU() * fix * svd.matrixV().transpose());
}

// ---------------------------------------------------------------------------
// Polarization-dependent loss

/// PDL in dB from intensity transmissions.
inline double pdl_db(double t_max, double t_min) {
    if (!(t_min > 0.0) || !(t_max >= t_min))
        throw Error(ErrorCode::InvalidTransmission, "require 0 < t_min <= t_max");
    return 10.0 * std::log10(t_max / t_min);
}

inline void check_amplitude_transmission(double t) {
    if (!(t >= 0.0 && t <= 1.0))
        throw Error(ErrorCode::InvalidTransmission, "amplitude transmission must lie in [0, 1]");
}

/// |Gamma| = (1 - T^2) / (1 + T^2).
inline double pdl_gamma(double amplitude_transmission) {
    check_amplitude_transmission(amplitude_transmission);
    const double t2 = amplitude_transmission * amplitude_transmission;
    return (1.0 - t2) / (1.0 + t2);
}

/// Amplitude transmission of the lossy eigenmode for a PDL of `db` decibels.
inline double amplitude_transmission_from_db(double db) {
    if (!(db >= 0.0)) throw Error(ErrorCode::InvalidTransmission, "PDL must be non-negative");
    return std::pow(10.0, -db / 20.0);
}

/// Lower bound (1 + T)^2 / 4 on the process fidelity of a PDL element.
inline double pdl_fidelity_bound(double amplitude_transmission) {
    check_amplitude_transmission(amplitude_transmission);
    return (1.0 + amplitude_transmission) * (1.0 + amplitude_transmission) / 4.0;
}

/// Partial polarizer: the pass state P is transmitted unchanged, the
/// orthogonal state with amplitude T. Gamma = gamma * (Bloch vector of P).
class PdlElement {
  public:
    PdlElement() = default;

    PdlElement(const Vec3 &pass_axis, double amplitude_transmission)
        : t_(amplitude_transmission) {
        check_amplitude_transmission(amplitude_transmission);
        const double n = pass_axis.norm();
        if (!(n > 0.0)) throw Error(ErrorCode::InvalidArgument, "PDL axis must be nonzero");
        axis_ = pass_axis / n;
    }

    static PdlElement lossless() { return {}; }

    static PdlElement from_db(const Vec3 &pass_axis, double db) {
        return {pass_axis, amplitude_transmission_from_db(db)};
    }

    /// Element from its PDL vector; |Gamma| must be in [0, 1).
    static PdlElement from_gamma_vec(const Vec3 &gamma_vec) {
        const double g = gamma_vec.norm();
        if (!(g < 1.0)) throw Error(ErrorCode::InvalidArgument, "|Gamma| must be below 1");
        if (g == 0.0) return {};
        // gamma = (1 - T^2)/(1 + T^2)  <=>  T^2 = (1 - gamma)/(1 + gamma)
        return {gamma_vec, std::sqrt((1.0 - g) / (1.0 + g))};
    }

    double amplitude_transmission() const { return t_; }
    double gamma() const {
        const double t2 = t_ * t_;
        return (1.0 - t2) / (1.0 + t2);
    }
    Vec3 gamma_vec() const { return gamma() * axis_; }
    const Vec3 &pass_axis() const { return axis_; }
    double db() const { return t_ > 0.0 ? -20.0 * std::log10(t_) : INFINITY; }

    /// B = T 1 + (1 - T) |P><P|.
    Mat2c operator_matrix() const {
        const Mat2c proj = 0.5 * (Mat2c::Identity() + pauli_dot(axis_));
        return t_ * Mat2c::Identity() + (1.0 - t_) * proj;
    }

  private:
    Vec3 axis_ = Vec3::UnitX();
    double t_ = 1.0;
};

/// Bloch-vector action of a PDL element on a (possibly mixed) state:
///   lambda_out = [ sqrt(1-g^2) lambda + ((1 - sqrt(1-g^2))/g^2 (lambda.Gamma) + 1) Gamma ]
///                / (1 + lambda.Gamma)
/// with (1 - sqrt(1-g^2))/g^2 evaluated as 1/(1 + sqrt(1-g^2)).
inline StokesVector pdl_apply_bloch(const StokesVector &lambda_in, const PdlElement &pdl) {
    const Vec3 gv = pdl.gamma_vec();
    const double g = pdl.gamma();
    const double proj = lambda_in.v.dot(gv);
    const double denom = 1.0 + proj;
    if (denom <= kExtinctionThreshold)
        throw Error(ErrorCode::FullyExtinguished, "input state is fully extinguished by the PDL element");
    const double root = std::sqrt(std::max(0.0, 1.0 - g * g));
    const double coeff = 1.0 / (1.0 + root);
    return StokesVector((root * lambda_in.v + (coeff * proj + 1.0) * gv) / denom);
}

/// Single element equivalent to applying `a` then `b`.
///
/// The operator product B_b B_a is polar-decomposed as scale * B_pdl * U;
/// its Bloch action is the residual `rotation` followed by `pdl`. For
/// coaxial inputs the rotation is the identity and T = T_a T_b.
struct PdlComposition {
    PolRotation rotation;
    PdlElement pdl;
    double scale = 1.0;  ///< amplitude transmission of the pass state
};

inline PdlComposition pdl_compose_operator(const Mat2c &k) {
    Eigen::JacobiSVD<Mat2c> svd(k, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const auto &sv = svd.singularValues();
    PdlComposition out;
    out.scale = sv[0];
    if (!(sv[0] > 0.0)) throw Error(ErrorCode::FullyExtinguished, "operator annihilates every state");
    const double t = std::clamp(sv[1] / sv[0], 0.0, 1.0);
    const Vec2c u0 = svd.matrixU().col(0);
    const Vec3 axis = stokes_from_density(u0 * u0.adjoint()).v;
    out.pdl = t < 1.0 ? PdlElement(axis, t) : PdlElement::lossless();
    Mat2c w = svd.matrixU() * svd.matrixV().adjoint();
    out.rotation = PolRotation::from_unitary(w);
    return out;
}

inline PdlComposition pdl_compose(const PdlElement &a, const PdlElement &b) {
    return pdl_compose_operator(b.operator_matrix() * a.operator_matrix());
}

/// Post-selected action rho -> K rho K^dag / tr(K rho K^dag) on a Bloch vector.
inline StokesVector apply_operator_bloch(const Mat2c &k, const StokesVector &s) {
    const Mat2c out = k * density_from_stokes(s) * k.adjoint();
    const double tr = out.trace().real();
    if (tr <= kExtinctionThreshold)
        throw Error(ErrorCode::FullyExtinguished, "state is annihilated by the operator");
    return stokes_from_density(out / tr);
}

/// Haar-random rotation (uniform unit quaternion).
template <class Generator>
PolRotation random_rotation(Generator &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    while (q.norm() < 1e-12) q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return PolRotation::reproject(q.toRotationMatrix());
}

/// Uniformly distributed pure state.
template <class Generator>
StokesVector random_pure_stokes(Generator &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Vec3 v(n(rng), n(rng), n(rng));
    while (v.norm() < 1e-12) v = Vec3(n(rng), n(rng), n(rng));
    return StokesVector(v.normalized());
}

}  // namespace fiberq
