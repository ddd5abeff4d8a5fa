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

// Two-qubit state tomography from coincidence tables.
//
// A record names one analysis state per photon (H, V, D, A, R or L) and
// holds the coincidences seen in that projector over its integration time.
// Linear inversion works in the product basis of (1, sigma) in Stokes order:
// the expected rate of projector a (x) b is
//   N/4 * sum_ij a_i b_j r_ij,   a = (1, s_a), b = (1, s_b),
// where rho = 1/4 sum_ij r_ij P_i (x) P_j and r_00 = 1.

#include <algorithm>
#include <array>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiberq/errors.hpp"
#include "fiberq/linalg.hpp"
#include "fiberq/polcore.hpp"
#include "fiberq/quantum.hpp"

namespace fiberq {

struct TomographyRecord {
    char basis_a = 'H';
    char basis_b = 'H';
    double counts = 0.0;
    double integration_s = 1.0;
};

using TomographyTable = std::vector<TomographyRecord>;

inline StokesVector basis_stokes(char label) {
    switch (label) {
        case 'H': return StokesVector::H();
        case 'V': return StokesVector::V();
        case 'D': return StokesVector::D();
        case 'A': return StokesVector::A();
        case 'R': return StokesVector::R();
        case 'L': return StokesVector::L();
        default: throw Error(ErrorCode::InvalidArgument, std::string("unknown basis label '") + label + "'");
    }
}

inline Mat4c record_projector(const TomographyRecord &r) {
    return kron(density_from_stokes(basis_stokes(r.basis_a)), density_from_stokes(basis_stokes(r.basis_b)));
}

/// The 16 settings {H,V,D,R} x {H,V,D,R}, zero counts.
inline TomographyTable standard_tomography_bases(double integration_s = 1.0) {
    static constexpr std::array<char, 4> labels{'H', 'V', 'D', 'R'};
    TomographyTable t;
    for (char a : labels)
        for (char b : labels) t.push_back({a, b, 0.0, integration_s});
    return t;
}

/// Fills counts with their expectation pair_rate * integration * p + extra * integration.
inline TomographyTable expected_counts(const DensityMatrix2Q &rho, TomographyTable table, double pair_rate,
                                       double extra_rate_per_s = 0.0) {
    for (auto &r : table) {
        const double p = std::max(0.0, (record_projector(r) * rho.matrix()).trace().real());
        r.counts = (pair_rate * p + extra_rate_per_s) * r.integration_s;
    }
    return table;
}

template <class Generator>
TomographyTable poisson_resample(const TomographyTable &table, Generator &rng) {
    TomographyTable out = table;
    for (auto &r : out) {
        if (r.counts > 0.0) {
            std::poisson_distribution<long long> d(r.counts);
            r.counts = static_cast<double>(d(rng));
        } else {
            r.counts = 0.0;
        }
    }
    return out;
}

namespace detail {

inline Eigen::Matrix<double, 1, 16> design_row(const TomographyRecord &r) {
    const Vec3 sa = basis_stokes(r.basis_a).v, sb = basis_stokes(r.basis_b).v;
    const Eigen::Vector4d a(1.0, sa[0], sa[1], sa[2]), b(1.0, sb[0], sb[1], sb[2]);
    Eigen::Matrix<double, 1, 16> row;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) row[i * 4 + j] = a[i] * b[j];
    return row;
}

inline Eigen::MatrixXd design_matrix(const TomographyTable &t) {
    Eigen::MatrixXd a(static_cast<Eigen::Index>(t.size()), 16);
    for (size_t k = 0; k < t.size(); ++k) a.row(static_cast<Eigen::Index>(k)) = design_row(t[k]);
    return a;
}

inline Eigen::Index design_rank(const Eigen::MatrixXd &a) {
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto &s = svd.singularValues();
    if (s.size() == 0 || s[0] <= 0.0) return 0;
    Eigen::Index r = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > 1e-10 * s[0]) ++r;
    return r;
}

inline Mat4c product_pauli(int i, int j) {
    const auto &p = stokes_paulis();
    const Mat2c a = i == 0 ? Mat2c(Mat2c::Identity()) : p[static_cast<size_t>(i - 1)];
    const Mat2c b = j == 0 ? Mat2c(Mat2c::Identity()) : p[static_cast<size_t>(j - 1)];
    return kron(a, b);
}

/// Clip negative eigenvalues and renormalize.
inline Mat4c physical_projection(const Mat4c &m) {
    Eigen::SelfAdjointEigenSolver<Mat4c> es(hermitian_part(m));
    const Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
    const double s = ev.sum();
    if (!(s > 0.0)) throw Error(ErrorCode::SingularDesign, "reconstruction has no positive part");
    const Mat4c out = es.eigenvectors() * (ev / s).cast<Complex>().asDiagonal() * es.eigenvectors().adjoint();
    return hermitian_part(out);
}

}  // namespace detail

/// True if the listed settings determine a two-qubit state.
inline bool informationally_complete(const TomographyTable &t) {
    return !t.empty() && detail::design_rank(detail::design_matrix(t)) == 16;
}

struct TomographyOptions {
    bool maximum_likelihood = false;  ///< R rho R refinement after inversion
    int ml_iterations = 500;
    double ml_tolerance = 1e-12;
    double ml_admixture = 1e-6;  ///< white-noise weight mixed into the starting point
};

/// Linear inversion followed by projection onto the physical states.
inline DensityMatrix2Q tomography_2q(const TomographyTable &table, const TomographyOptions &opt = {}) {
    for (const auto &r : table)
        if (!(r.counts >= 0.0) || !(r.integration_s > 0.0))
            throw Error(ErrorCode::InvalidArgument, "counts must be >= 0 and integration time > 0");
    const Eigen::MatrixXd a = detail::design_matrix(table);
    if (table.empty() || detail::design_rank(a) < 16)
        throw Error(ErrorCode::SingularDesign, "basis set is not informationally complete");
    Eigen::VectorXd rates(static_cast<Eigen::Index>(table.size()));
    for (size_t k = 0; k < table.size(); ++k)
        rates[static_cast<Eigen::Index>(k)] = table[k].counts / table[k].integration_s;
    const Eigen::VectorXd y = a.colPivHouseholderQr().solve(rates);
    if (!(y[0] > 0.0)) throw Error(ErrorCode::SingularDesign, "no coincidences to reconstruct from");

    Mat4c m = Mat4c::Zero();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) m += (y[i * 4 + j] / y[0] / 4.0) * detail::product_pauli(i, j);
    Mat4c rho = detail::physical_projection(m);

    if (opt.maximum_likelihood) {
        // R rho R iteration for Poisson data over an incomplete projector set:
        // rho <- G^-1 R rho R G^-1 with G = sum_k t_k Pi_k.
        std::vector<Mat4c> proj;
        Mat4c g = Mat4c::Zero();
        double n_total = 0.0;
        for (const auto &r : table) {
            proj.push_back(record_projector(r));
            g += r.integration_s * proj.back();
            n_total += r.counts;
        }
        const Mat4c g_inv = g.inverse();
        // Keep a small full-rank admixture so zero eigenvalues can move.
        rho = (1.0 - opt.ml_admixture) * rho + opt.ml_admixture * Mat4c::Identity() / 4.0;
        for (int it = 0; it < opt.ml_iterations; ++it) {
            double expected = 0.0;
            for (size_t k = 0; k < proj.size(); ++k)
                expected += table[k].integration_s * (proj[k] * rho).trace().real();
            const double scale = n_total / expected;
            Mat4c rop = Mat4c::Zero();
            for (size_t k = 0; k < proj.size(); ++k) {
                const double lambda = scale * table[k].integration_s * (proj[k] * rho).trace().real();
                if (lambda > 1e-300) rop += (table[k].counts / lambda) * table[k].integration_s * proj[k];
            }
            Mat4c next = g_inv * rop * rho * rop * g_inv;
            next = detail::hermitian_part(Mat4c(next / next.trace().real()));
            const double delta = (next - rho).cwiseAbs().maxCoeff();
            rho = next;
            if (delta < opt.ml_tolerance) break;
        }
        rho = detail::physical_projection(rho);
    }
    return DensityMatrix2Q(rho);
}

/// Summary of a Poisson bootstrap over a count table.
struct McSummary {
    double point_fidelity = 0.0;
    double mean_fidelity = 0.0;
    double sigma_fidelity = 0.0;
    double point_purity = 0.0;
    double mean_purity = 0.0;
    double sigma_purity = 0.0;
    int resamples = 0;
    int failed_resamples = 0;
    /// Records with nonzero counts do not span the two-qubit state space, so
    /// the reconstruction is driven by the physical projection rather than data.
    bool degenerate = false;
};

template <class Generator>
McSummary mc_uncertainty(const TomographyTable &table, int n_resamples, const Vec4c &target, Generator &rng,
                         const TomographyOptions &opt = {}) {
    if (n_resamples < 100) throw Error(ErrorCode::InvalidArgument, "mc_uncertainty needs at least 100 resamples");
    McSummary s;
    TomographyTable observed;
    for (const auto &r : table)
        if (r.counts > 0.0) observed.push_back(r);
    s.degenerate = !informationally_complete(observed);

    try {
        const auto rho = tomography_2q(table, opt);
        s.point_fidelity = rho.fidelity(target);
        s.point_purity = rho.purity();
    } catch (const Error &e) {
        if (e.code() != ErrorCode::SingularDesign) throw;
        s.degenerate = true;
    }

    std::vector<double> f, pu;
    f.reserve(static_cast<size_t>(n_resamples));
    for (int k = 0; k < n_resamples; ++k) {
        try {
            const auto rho = tomography_2q(poisson_resample(table, rng), opt);
            f.push_back(rho.fidelity(target));
            pu.push_back(rho.purity());
        } catch (const Error &e) {
            if (e.code() != ErrorCode::SingularDesign) throw;
            ++s.failed_resamples;
        }
    }
    s.resamples = static_cast<int>(f.size());
    if (s.failed_resamples > 0) s.degenerate = true;
    auto mean_sd = [](const std::vector<double> &v, double &m, double &sd) {
        if (v.empty()) return;
        m = 0.0;
        for (double x : v) m += x;
        m /= static_cast<double>(v.size());
        double q = 0.0;
        for (double x : v) q += (x - m) * (x - m);
        sd = v.size() > 1 ? std::sqrt(q / static_cast<double>(v.size() - 1)) : 0.0;
    };
    mean_sd(f, s.mean_fidelity, s.sigma_fidelity);
    mean_sd(pu, s.mean_purity, s.sigma_purity);
    return s;
}

/// Accidental-coincidence subtraction. The expected accidentals of one
/// setting are rate_a * rate_b * window * integration, rates being the
/// singles at the two detectors involved.
inline TomographyTable background_correction(const TomographyTable &table, double singles_a_per_s,
                                             double singles_b_per_s, double window_s) {
    if (!(singles_a_per_s >= 0.0 && singles_b_per_s >= 0.0 && window_s >= 0.0))
        throw Error(ErrorCode::InvalidArgument, "background rates and window must be non-negative");
    TomographyTable out = table;
    const double acc = singles_a_per_s * singles_b_per_s * window_s;
    for (auto &r : out) r.counts = std::max(0.0, r.counts - acc * r.integration_s);
    return out;
}

inline double accidental_rate(double singles_a_per_s, double singles_b_per_s, double window_s) {
    return singles_a_per_s * singles_b_per_s * window_s;
}

// ---------------------------------------------------------------------------
// Single qubit

/// Bloch vector from +/- counts along the three Stokes axes; clipped to the sphere.
inline StokesVector tomography_1q(const std::array<std::array<double, 2>, 3> &counts) {
    Vec3 s;
    for (int k = 0; k < 3; ++k) {
        const double n = counts[static_cast<size_t>(k)][0] + counts[static_cast<size_t>(k)][1];
        if (!(n > 0.0)) throw Error(ErrorCode::SingularDesign, "single-qubit tomography axis without counts");
        s[k] = (counts[static_cast<size_t>(k)][0] - counts[static_cast<size_t>(k)][1]) / n;
    }
    if (s.norm() > 1.0) s.normalize();
    return StokesVector(s);
}

}  // namespace fiberq
