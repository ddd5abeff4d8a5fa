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

// Two-qubit density-matrix engine for the network protocols.
//
// Ordering: photon A (or the ion) is the first tensor factor, photon B the
// second. Photon states use the polcore basis H = |0>, V = |1>,
// R = (|0> + i|1>)/sqrt2. The ion memory basis is |0> = |-1/2>,
// |1> = |+1/2>.
//
// Sign convention for the pair source: the lab phase phi enters as
// (|HV> + e^{-i phi}|VH>)/sqrt2, so phi = 0 is Psi+. The relative minus sign
// of the written source state is absorbed into the definition of V on arm A.

#include <array>
#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "fiberq/channel.hpp"
#include "fiberq/errors.hpp"
#include "fiberq/linalg.hpp"
#include "fiberq/polcore.hpp"

namespace fiberq {

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kTraceTol = 1e-10;
inline constexpr double kPositivityTol = 1e-9;

namespace detail {

template <class M>
void check_density(const M &m, const char *what) {
    if ((m - m.adjoint()).cwiseAbs().maxCoeff() > kHermitianTol)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": not Hermitian");
    if (std::abs(m.trace() - std::complex<double>(1.0, 0.0)) > kTraceTol)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": trace differs from 1");
    Eigen::SelfAdjointEigenSolver<M> es(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -kPositivityTol)
        throw Error(ErrorCode::InvalidArgument, std::string(what) + ": negative eigenvalue");
}

template <class M>
M hermitian_part(const M &m) {
    return 0.5 * (m + m.adjoint());
}

}  // namespace detail

/// Validated two-qubit density matrix.
class DensityMatrix2Q {
  public:
    DensityMatrix2Q() : m_(Mat4c::Identity() / 4.0) {}

    explicit DensityMatrix2Q(const Mat4c &m) : m_(m) { detail::check_density(m_, "DensityMatrix2Q"); }

    /// Hermitian part of m scaled to unit trace, then validated.
    static DensityMatrix2Q normalized(const Mat4c &m) {
        const Mat4c h = detail::hermitian_part(m);
        const double tr = h.trace().real();
        if (!(tr > 0.0)) throw Error(ErrorCode::InvalidArgument, "DensityMatrix2Q: non-positive trace");
        return DensityMatrix2Q(h / tr);
    }

    static DensityMatrix2Q pure(const Vec4c &psi) {
        const Vec4c k = psi.normalized();
        return DensityMatrix2Q(Mat4c(k * k.adjoint()));
    }

    static DensityMatrix2Q maximally_mixed() { return DensityMatrix2Q(); }

    static DensityMatrix2Q product(const Mat2c &a, const Mat2c &b) { return normalized(kron(a, b)); }

    const Mat4c &matrix() const { return m_; }
    Complex operator()(int i, int j) const { return m_(i, j); }

    double fidelity(const Vec4c &psi) const {
        const Vec4c k = psi.normalized();
        return (k.adjoint() * m_ * k)(0, 0).real();
    }

    double fidelity(const DensityMatrix2Q &other) const { return uhlmann_fidelity(m_, other.m_); }

    double purity() const { return (m_ * m_).trace().real(); }

    double trace_distance(const DensityMatrix2Q &other) const {
        Eigen::SelfAdjointEigenSolver<Mat4c> es(detail::hermitian_part(Mat4c(m_ - other.m_)),
                                                Eigen::EigenvaluesOnly);
        return 0.5 * es.eigenvalues().cwiseAbs().sum();
    }

    Mat2c reduced_first() const { return partial_trace_second(m_); }
    Mat2c reduced_second() const { return partial_trace_first(m_); }

  private:
    Mat4c m_;
};

// ---------------------------------------------------------------------------
// Bell states, computational basis of (first, second)

namespace bell {

inline Vec4c make(Complex a00, Complex a01, Complex a10, Complex a11) {
    Vec4c v;
    v << a00, a01, a10, a11;
    return v / std::sqrt(2.0);
}
inline Vec4c phi_plus() { return make(1, 0, 0, 1); }
inline Vec4c phi_minus() { return make(1, 0, 0, -1); }
inline Vec4c psi_plus() { return make(0, 1, 1, 0); }
inline Vec4c psi_minus() { return make(0, 1, -1, 0); }

}  // namespace bell

inline Vec2c ket_h() { return Vec2c(1, 0); }
inline Vec2c ket_v() { return Vec2c(0, 1); }
inline Vec2c ket_r() { return Vec2c(1, Complex(0, 1)) / std::sqrt(2.0); }
inline Vec2c ket_l() { return Vec2c(1, Complex(0, -1)) / std::sqrt(2.0); }

// ---------------------------------------------------------------------------
// Pair source

struct SpdcSource {
    double phase_rad = 0.0;
    double pair_rate_per_s = 1.0e3;
    double white_noise = 0.0;  ///< p in [0, 1]
};

inline void check_source(const SpdcSource &s) {
    if (!(s.white_noise >= 0.0 && s.white_noise <= 1.0))
        throw Error(ErrorCode::InvalidArgument, "white_noise must lie in [0, 1]");
    if (!(s.pair_rate_per_s >= 0.0) || !std::isfinite(s.phase_rad))
        throw Error(ErrorCode::InvalidArgument, "invalid pair source");
}

/// Ideal source ket (|HV> + e^{-i phi}|VH>)/sqrt2.
inline Vec4c spdc_ket(double phase_rad) {
    return bell::make(0, 1, std::polar(1.0, -phase_rad), 0);
}

/// (1 - p)|Psi(phi)><Psi(phi)| + p 1/4.
inline DensityMatrix2Q spdc_state(const SpdcSource &src) {
    check_source(src);
    const Vec4c k = spdc_ket(src.phase_rad);
    const Mat4c m = (1.0 - src.white_noise) * Mat4c(k * k.adjoint()) + src.white_noise * Mat4c::Identity() / 4.0;
    return DensityMatrix2Q::normalized(m);
}

/// White-noise parameter that gives Bell fidelity f: f = 1 - 3p/4.
inline double white_noise_for_fidelity(double f) {
    if (!(f >= 0.25 && f <= 1.0)) throw Error(ErrorCode::InvalidArgument, "Bell fidelity must lie in [1/4, 1]");
    return 4.0 * (1.0 - f) / 3.0;
}

// ---------------------------------------------------------------------------
// Channel on arm B

struct ArmResult {
    DensityMatrix2Q rho;
    double success_prob = 1.0;
};

/// (1 (x) K) rho (1 (x) K)^dag, renormalized; success is the pre-normalization trace.
inline ArmResult apply_operator_arm_b(const DensityMatrix2Q &rho, const Mat2c &k) {
    const Mat4c full = kron(Mat2c::Identity(), k);
    const Mat4c out = full * rho.matrix() * full.adjoint();
    const double p = out.trace().real();
    if (!(p > kExtinctionThreshold)) throw Error(ErrorCode::FullyExtinguished, "arm B fully extinguished");
    return {DensityMatrix2Q::normalized(out / p), p};
}

inline ArmResult apply_channel_arm_b(const DensityMatrix2Q &rho, const ChannelState &ch) {
    return apply_operator_arm_b(rho, transmit_qubit_kraus(ch));
}

// ---------------------------------------------------------------------------
// Ion memory

/// Effective dephasing rate (1/s) that brings a source with p = 0.2187 to an
/// ion-photon fidelity of 0.79 over a 400 us exposure.
inline constexpr double kCalibratedIonDephasing = 313.0;

struct IonMemory {
    double exposure_s = 400e-6;
    double dephasing_rate_per_s = 0.0;  ///< after spin echo

    /// Surviving coherence exp(-rate * exposure).
    double coherence() const { return std::exp(-dephasing_rate_per_s * exposure_s); }
};

inline void check_ion(const IonMemory &ion) {
    if (!(ion.dephasing_rate_per_s >= 0.0) || !(ion.exposure_s >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "ion dephasing rate and exposure must be non-negative");
}

/// Photon polarization to memory qubit: |R> -> |-1/2>, |L> -> |+1/2>.
/// The same map sends photon B into the logical frame used for teleportation.
inline Mat2c absorption_map() {
    Mat2c w;
    w.row(0) = ket_r().adjoint();
    w.row(1) = ket_l().adjoint();
    return w;
}

/// Photon state (H/V basis) in the logical R/L frame.
inline Mat2c photon_to_logical(const Mat2c &rho_hv) {
    const Mat2c w = absorption_map();
    return w * rho_hv * w.adjoint();
}

inline Mat2c photon_from_logical(const Mat2c &rho_logical) {
    const Mat2c w = absorption_map();
    return w.adjoint() * rho_logical * w;
}

/// (|-1/2>|R> - |+1/2>|L>)/sqrt2, ion first, photon B in H/V.
inline Vec4c ion_photon_target() {
    return (kron(Vec2c(1, 0), ket_r()) - kron(Vec2c(0, 1), ket_l())) / std::sqrt(2.0);
}

/// Dephasing of the first factor: coherences between ion levels scale by c.
inline Mat4c dephase_first(const Mat4c &m, double c) {
    Mat4c out = m;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if ((i / 2) != (j / 2)) out(i, j) *= c;
    return out;
}

inline Mat2c dephase_qubit(const Mat2c &m, double c) {
    Mat2c out = m;
    out(0, 1) *= c;
    out(1, 0) *= c;
    return out;
}

/// Maps photon A onto the ion and dephases the memory for the exposure.
inline DensityMatrix2Q heralded_absorption(const DensityMatrix2Q &rho_pair, const IonMemory &ion) {
    check_ion(ion);
    const Mat4c w = kron(absorption_map(), Mat2c::Identity());
    const Mat4c mapped = w * rho_pair.matrix() * w.adjoint();
    return DensityMatrix2Q::normalized(dephase_first(mapped, ion.coherence()));
}

// ---------------------------------------------------------------------------
// Teleportation by heralded absorption

enum class BsmHerald { PhiPlus, PhiMinus };

inline const char *herald_name(BsmHerald h) { return h == BsmHerald::PhiPlus ? "phi_plus" : "phi_minus"; }

/// Distinguished Bell states of (ion, photon A):
/// (|-1/2>|R> +- |+1/2>|L>)/sqrt2.
inline Vec4c bsm_state(BsmHerald h) {
    const double s = h == BsmHerald::PhiPlus ? 1.0 : -1.0;
    return (kron(Vec2c(1, 0), ket_r()) + s * kron(Vec2c(0, 1), ket_l())) / std::sqrt(2.0);
}

/// Unnormalized photon-B state (H/V basis) for one herald. Its trace is the
/// herald probability. The map is linear in `prepared`.
inline Mat2c teleport_branch_operator(const Mat2c &prepared, const DensityMatrix2Q &rho_pair,
                                      const IonMemory &ion, BsmHerald h) {
    check_ion(ion);
    const Mat2c ion_state = dephase_qubit(prepared, ion.coherence());
    const Eigen::MatrixXcd total = kron_dynamic(ion_state, rho_pair.matrix());  // (ion, A, B)
    const Vec4c phi = bsm_state(h);
    Mat2c out = Mat2c::Zero();
    for (int b = 0; b < 2; ++b)
        for (int bp = 0; bp < 2; ++bp)
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) out(b, bp) += std::conj(phi[i]) * phi[j] * total(2 * i + b, 2 * j + bp);
    return out;
}

struct TeleportBranch {
    BsmHerald herald = BsmHerald::PhiMinus;
    double probability = 0.0;
    Mat2c photon = Mat2c::Zero();  ///< normalized, H/V basis
};

inline std::array<TeleportBranch, 2> teleport_branches(const Mat2c &prepared, const DensityMatrix2Q &rho_pair,
                                                       const IonMemory &ion) {
    std::array<TeleportBranch, 2> out;
    const std::array<BsmHerald, 2> hs{BsmHerald::PhiPlus, BsmHerald::PhiMinus};
    for (int k = 0; k < 2; ++k) {
        const Mat2c m = teleport_branch_operator(prepared, rho_pair, ion, hs[k]);
        const double p = m.trace().real();
        out[k].herald = hs[k];
        out[k].probability = p;
        out[k].photon = p > 0.0 ? Mat2c(detail::hermitian_part(Mat2c(m / p))) : Mat2c::Zero();
    }
    return out;
}

struct TeleportEvent {
    bool heralded = false;
    BsmHerald herald = BsmHerald::PhiMinus;
    Mat2c photon = Mat2c::Zero();  ///< H/V basis; zero when not heralded
};

/// One heralded-absorption attempt. Undistinguished Bell outcomes come back
/// with heralded = false.
template <class Generator>
TeleportEvent bsm_teleport(const Mat2c &prepared, const DensityMatrix2Q &rho_pair, const IonMemory &ion,
                           Generator &rng) {
    const auto br = teleport_branches(prepared, rho_pair, ion);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double x = u(rng);
    if (x < br[0].probability) return {true, br[0].herald, br[0].photon};
    if (x < br[0].probability + br[1].probability) return {true, br[1].herald, br[1].photon};
    return {};
}

/// Pauli frame correction expected for a herald (logical frame).
inline Mat2c herald_correction(BsmHerald h) {
    return h == BsmHerald::PhiPlus ? Mat2c(stokes_paulis()[0]) : Mat2c(Mat2c::Identity());
}

// ---------------------------------------------------------------------------
// Process tomography

/// Pauli basis {sigma_0, sigma_x, sigma_y, sigma_z} in the computational basis.
inline const std::array<Mat2c, 4> &process_basis() {
    static const std::array<Mat2c, 4> b = [] {
        const auto &p = stokes_paulis();
        return std::array<Mat2c, 4>{Mat2c::Identity(), p[1], p[2], p[0]};
    }();
    return b;
}

/// chi in the Pauli basis: E(rho) = sum_mn chi_mn P_m rho P_n^dag.
struct ProcessMatrix {
    Mat4c chi = Mat4c::Zero();

    double element(int m) const { return chi(m, m).real(); }
    double identity_weight() const { return element(0); }
    double trace() const { return chi.trace().real(); }

    /// Apply the process to a single-qubit state.
    Mat2c apply(const Mat2c &rho) const {
        const auto &p = process_basis();
        Mat2c out = Mat2c::Zero();
        for (int m = 0; m < 4; ++m)
            for (int n = 0; n < 4; ++n) out += chi(m, n) * p[m] * rho * p[n].adjoint();
        return out;
    }
};

using QubitChannel = std::function<Mat2c(const Mat2c &)>;

/// Standard informationally complete input set {H, V, D, R}.
inline std::vector<Mat2c> standard_process_inputs() {
    return {density_from_stokes(StokesVector::H()), density_from_stokes(StokesVector::V()),
            density_from_stokes(StokesVector::D()), density_from_stokes(StokesVector::R())};
}

namespace detail {

inline Eigen::Vector4cd vec2(const Mat2c &m) {
    return Eigen::Vector4cd(m(0, 0), m(1, 0), m(0, 1), m(1, 1));  // column-major
}

}  // namespace detail

/// chi from (input, output) pairs. Outputs may be unnormalized; pass
/// normalize = true to scale chi to unit trace.
inline ProcessMatrix process_from_pairs(const std::vector<Mat2c> &inputs, const std::vector<Mat2c> &outputs,
                                        bool normalize = true) {
    if (inputs.size() != outputs.size() || inputs.empty())
        throw Error(ErrorCode::InvalidArgument, "process tomography needs matching input/output sets");
    const auto n = static_cast<Eigen::Index>(inputs.size());
    Eigen::MatrixXcd x(4, n), y(4, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        x.col(j) = detail::vec2(inputs[static_cast<size_t>(j)]);
        y.col(j) = detail::vec2(outputs[static_cast<size_t>(j)]);
    }
    // S x = y in the least-squares sense, solved as x^T S^T = y^T.
    const Eigen::MatrixXcd xt = x.transpose();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(xt, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto &sv = svd.singularValues();
    if (sv.size() < 4 || sv[3] < 1e-10 * sv[0])
        throw Error(ErrorCode::SingularDesign, "input set is not informationally complete");
    const Eigen::Matrix4cd s = svd.solve(Eigen::MatrixXcd(y.transpose())).transpose();

    // S = sum_mn chi_mn conj(P_n) (x) P_m.
    const auto &p = process_basis();
    Eigen::Matrix<Complex, 16, 16> a;
    for (int m = 0; m < 4; ++m)
        for (int k = 0; k < 4; ++k) {
            const Mat4c term = kron(Mat2c(p[k].conjugate()), p[m]);
            a.col(m * 4 + k) = Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(term.data());
        }
    const Eigen::Matrix<Complex, 16, 1> rhs = Eigen::Map<const Eigen::Matrix<Complex, 16, 1>>(s.data());
    const Eigen::Matrix<Complex, 16, 1> c = a.fullPivLu().solve(rhs);
    ProcessMatrix out;
    for (int m = 0; m < 4; ++m)
        for (int k = 0; k < 4; ++k) out.chi(m, k) = c[m * 4 + k];
    out.chi = detail::hermitian_part(out.chi);
    if (normalize) {
        const double tr = out.chi.trace().real();
        if (!(tr > 0.0)) throw Error(ErrorCode::SingularDesign, "process has zero trace");
        out.chi /= tr;
    }
    return out;
}

inline ProcessMatrix process_tomography(const QubitChannel &channel,
                                        const std::vector<Mat2c> &inputs = standard_process_inputs(),
                                        bool normalize = true) {
    std::vector<Mat2c> outputs;
    outputs.reserve(inputs.size());
    for (const auto &in : inputs) outputs.push_back(channel(in));
    return process_from_pairs(inputs, outputs, normalize);
}

/// Exact teleportation process for one herald, in the logical frame.
inline ProcessMatrix teleport_process(const DensityMatrix2Q &rho_pair, const IonMemory &ion, BsmHerald h) {
    return process_tomography([&](const Mat2c &prepared) {
        return photon_to_logical(teleport_branch_operator(prepared, rho_pair, ion, h));
    });
}

/// Process fidelity of a herald branch with its expected Pauli frame.
inline double teleport_process_fidelity(const ProcessMatrix &chi, BsmHerald h) {
    return h == BsmHerald::PhiPlus ? chi.element(3) : chi.element(0);
}

}  // namespace fiberq
