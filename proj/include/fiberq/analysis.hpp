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

// Post-processing for the channel characterization datasets.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fiberq/channel.hpp"
#include "fiberq/errors.hpp"
#include "fiberq/polcore.hpp"

namespace fiberq {

// ---------------------------------------------------------------------------
// Quantile surfaces

struct DriftSample {
    double tau_s = 0.0;
    double fp = 1.0;
};

struct QuantileOptions {
    /// Certainty levels; the curve for q is the (1 - q) lower quantile of F_P.
    std::vector<double> levels{0.90, 0.99, 0.999};
    /// Fidelity histogram bins over [fp_min, 1].
    double fp_min = 0.9;
    int fp_bins = 100;
    std::size_t min_samples = 100;
    bool isotonic = false;  ///< force curves non-increasing in tau
    bool strict = false;    ///< throw instead of warning on thin bins
    double tau_tolerance_s = 1e-9;
};

struct QuantileSurface {
    std::vector<double> tau_s;
    std::vector<double> fp_edges;          ///< fp_bins + 1 edges
    Eigen::MatrixXd incidence;             ///< fp_bins x tau, each column sums to 1
    std::vector<std::size_t> samples;      ///< per tau column
    std::vector<double> levels;
    std::vector<std::vector<double>> curves;  ///< curves[level][tau]
    std::vector<std::string> warnings;

    const std::vector<double> &curve(double level) const {
        for (std::size_t k = 0; k < levels.size(); ++k)
            if (std::abs(levels[k] - level) < 1e-12) return curves[k];
        throw Error(ErrorCode::InvalidArgument, "no curve for level " + std::to_string(level));
    }
};

/// Type-7 (linear interpolation) empirical quantile of sorted data.
inline double sorted_quantile(const std::vector<double> &sorted, double q) {
    if (sorted.empty()) throw Error(ErrorCode::EmptySeries, "quantile of empty sample");
    const double h = (static_cast<double>(sorted.size()) - 1.0) * std::clamp(q, 0.0, 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

/// Pool-adjacent-violators fit of a non-increasing sequence (equal weights).
inline std::vector<double> isotonic_non_increasing(const std::vector<double> &y) {
    std::vector<double> val;
    std::vector<std::size_t> len;
    for (double v : y) {
        val.push_back(v);
        len.push_back(1);
        while (val.size() > 1 && val[val.size() - 2] < val.back()) {
            const double n1 = static_cast<double>(len[len.size() - 2]), n2 = static_cast<double>(len.back());
            const double m = (val[val.size() - 2] * n1 + val.back() * n2) / (n1 + n2);
            val.pop_back();
            const std::size_t l = len.back();
            len.pop_back();
            val.back() = m;
            len.back() += l;
        }
    }
    std::vector<double> out;
    for (std::size_t k = 0; k < val.size(); ++k) out.insert(out.end(), len[k], val[k]);
    return out;
}

inline QuantileSurface quantile_surface(const std::vector<DriftSample> &samples, const QuantileOptions &opt = {}) {
    if (samples.empty()) throw Error(ErrorCode::EmptySeries, "no drift samples");
    if (opt.fp_bins < 1 || !(opt.fp_min < 1.0)) throw Error(ErrorCode::InvalidArgument, "invalid fidelity binning");
    for (double q : opt.levels)
        if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::InvalidArgument, "quantile levels must lie in (0, 1)");

    // Group by tau.
    std::vector<DriftSample> sorted = samples;
    std::sort(sorted.begin(), sorted.end(),
              [](const DriftSample &a, const DriftSample &b) { return a.tau_s < b.tau_s; });
    std::vector<std::vector<double>> cols;
    QuantileSurface s;
    for (const auto &x : sorted) {
        if (s.tau_s.empty() || x.tau_s - s.tau_s.back() > opt.tau_tolerance_s) {
            s.tau_s.push_back(x.tau_s);
            cols.emplace_back();
        }
        cols.back().push_back(x.fp);
    }

    const auto n_tau = static_cast<Eigen::Index>(cols.size());
    s.levels = opt.levels;
    s.fp_edges.resize(static_cast<std::size_t>(opt.fp_bins) + 1);
    for (int k = 0; k <= opt.fp_bins; ++k)
        s.fp_edges[static_cast<std::size_t>(k)] = opt.fp_min + (1.0 - opt.fp_min) * k / opt.fp_bins;
    s.incidence = Eigen::MatrixXd::Zero(opt.fp_bins, n_tau);
    s.curves.assign(opt.levels.size(), std::vector<double>(cols.size(), 0.0));

    for (std::size_t c = 0; c < cols.size(); ++c) {
        auto &col = cols[c];
        std::sort(col.begin(), col.end());
        s.samples.push_back(col.size());
        if (col.size() < opt.min_samples) {
            const std::string msg = "tau = " + std::to_string(s.tau_s[c]) + " s has " + std::to_string(col.size()) +
                                    " samples (< " + std::to_string(opt.min_samples) + ")";
            if (opt.strict) throw Error(ErrorCode::InsufficientSamples, msg);
            s.warnings.push_back(msg);
        }
        for (double f : col) {
            if (f < opt.fp_min) continue;
            int b = static_cast<int>((f - opt.fp_min) / (1.0 - opt.fp_min) * opt.fp_bins);
            b = std::clamp(b, 0, opt.fp_bins - 1);
            s.incidence(b, static_cast<Eigen::Index>(c)) += 1.0;
        }
        // Per-column normalization over all samples in the column.
        s.incidence.col(static_cast<Eigen::Index>(c)) /= static_cast<double>(col.size());
        for (std::size_t k = 0; k < opt.levels.size(); ++k)
            s.curves[k][c] = sorted_quantile(col, 1.0 - opt.levels[k]);
    }
    if (opt.isotonic)
        for (auto &c : s.curves) c = isotonic_non_increasing(c);
    return s;
}

/// Free-drift F_P samples: each trial starts a fresh drift at identity and
/// records F_P at every tau of the grid (taus must be increasing).
template <class Generator>
std::vector<DriftSample> free_drift_samples(const DriftParams &params, const std::vector<double> &taus, int trials,
                                            Generator &rng, double max_step_s = 1.0) {
    if (trials < 1 || taus.empty()) throw Error(ErrorCode::InvalidArgument, "need trials and a tau grid");
    for (std::size_t k = 0; k < taus.size(); ++k)
        if (!(taus[k] > 0.0) || (k > 0 && taus[k] <= taus[k - 1]))
            throw Error(ErrorCode::InvalidArgument, "tau grid must be positive and increasing");
    std::vector<DriftSample> out;
    out.reserve(taus.size() * static_cast<std::size_t>(trials));
    std::uniform_real_distribution<double> start(0.0, kSecondsPerDay);
    for (int t = 0; t < trials; ++t) {
        DriftParams p = params;
        DriftProcess d(p, PolRotation::identity(), rng());
        double now = 0.0;
        for (double tau : taus) {
            d.advance(tau - now, max_step_s);
            now = tau;
            out.push_back({tau, process_fidelity(d.rotation()).value});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// PDL statistics

struct MeanSd {
    double mean = 0.0;
    double sd = 0.0;
};

inline MeanSd mean_sd(const std::vector<double> &v) {
    if (v.empty()) throw Error(ErrorCode::EmptySeries, "empty sample");
    MeanSd r;
    for (double x : v) r.mean += x;
    r.mean /= static_cast<double>(v.size());
    if (v.size() > 1) {
        double q = 0.0;
        for (double x : v) q += (x - r.mean) * (x - r.mean);
        r.sd = std::sqrt(q / static_cast<double>(v.size() - 1));
    }
    return r;
}

struct PdlEstimate {
    double mean_db = 0.0;   ///< single-fiber PDL
    double sigma_db = 0.0;  ///< quadrature-propagated spread
};

/// L = (<L_tot> - <L_det>) / 2 on distribution means; sigma from the two
/// sample standard deviations in quadrature, halved.
inline PdlEstimate pdl_statistics(const std::vector<double> &total_db, const std::vector<double> &detection_db) {
    const MeanSd t = mean_sd(total_db), d = mean_sd(detection_db);
    return {(t.mean - d.mean) / 2.0, std::hypot(t.sd, d.sd) / 2.0};
}

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;
};

inline Histogram make_histogram(const std::vector<double> &v, double lo, double hi, int bins) {
    if (bins < 1 || !(hi > lo)) throw Error(ErrorCode::InvalidArgument, "invalid histogram range");
    Histogram h;
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    for (int k = 0; k <= bins; ++k) h.edges.push_back(lo + (hi - lo) * k / bins);
    for (double x : v) {
        if (x < lo || x > hi) continue;
        const int b = std::min(bins - 1, static_cast<int>((x - lo) / (hi - lo) * bins));
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

// ---------------------------------------------------------------------------
// Wave packets

struct HistogramBin {
    double t_ns = 0.0;
    double counts = 0.0;
};

struct WavePacketFit {
    double tau_ns = 0.0;      ///< decay constant
    double tau_sigma_ns = 0.0;  ///< standard error assuming Poisson bins
    double amplitude = 0.0;   ///< fitted counts at the peak bin
    double t_start_ns = 0.0;  ///< first and last bin of the fit window
    double t_end_ns = 0.0;
    double residual_norm = 0.0;  ///< weighted log-domain residual
    std::size_t bins_used = 0;
};

/// Exponential fit of the falling flank: bins from the peak up to (not
/// including) the first bin below 5% of the peak, weighted least squares on
/// log counts with weights equal to the counts.
inline WavePacketFit wavepacket_fit(const std::vector<HistogramBin> &hist, double floor_fraction = 0.05,
                                    std::size_t min_bins = 10) {
    if (hist.empty()) throw Error(ErrorCode::EmptySeries, "empty wave-packet histogram");
    std::vector<HistogramBin> h = hist;
    std::sort(h.begin(), h.end(), [](const HistogramBin &a, const HistogramBin &b) { return a.t_ns < b.t_ns; });
    std::size_t peak = 0;
    for (std::size_t k = 1; k < h.size(); ++k)
        if (h[k].counts > h[peak].counts) peak = k;
    const double top = h[peak].counts;
    if (!(top > 0.0)) throw Error(ErrorCode::FitDiverged, "wave packet has no counts");
    std::size_t end = peak;
    while (end < h.size() && h[end].counts >= floor_fraction * top) ++end;
    if (end - peak < min_bins)
        throw Error(ErrorCode::InsufficientSamples, "fewer than " + std::to_string(min_bins) + " bins on the flank");

    const double t0 = h[peak].t_ns;
    Eigen::MatrixXd a(static_cast<Eigen::Index>(end - peak), 2);
    Eigen::VectorXd y(a.rows());
    for (std::size_t k = peak; k < end; ++k) {
        const auto r = static_cast<Eigen::Index>(k - peak);
        const double w = std::sqrt(h[k].counts);
        a(r, 0) = w;
        a(r, 1) = w * (h[k].t_ns - t0);
        y[r] = w * std::log(h[k].counts);
    }
    const Eigen::Vector2d c = a.colPivHouseholderQr().solve(y);
    if (!(c[1] < 0.0) || !std::isfinite(c[0]))
        throw Error(ErrorCode::FitDiverged, "flank does not decay");
    WavePacketFit f;
    f.tau_ns = -1.0 / c[1];
    f.amplitude = std::exp(c[0]);
    f.t_start_ns = t0;
    f.t_end_ns = h[end - 1].t_ns;
    f.residual_norm = (a * c - y).norm();
    // With weights sqrt(n) the log-count noise is unit variance, so the
    // parameter covariance is (A^T A)^-1.
    const Eigen::Matrix2d cov = (a.transpose() * a).inverse();
    f.tau_sigma_ns = f.tau_ns * f.tau_ns * std::sqrt(cov(1, 1));
    f.bins_used = end - peak;
    return f;
}

/// One-sided exponential packet A exp(-(t - t0)/tau) for t >= t0, sampled
/// at bin centres, optionally smeared by Gaussian timing jitter.
inline std::vector<HistogramBin> exponential_packet(double amplitude, double tau_ns, double t0_ns, double bin_ns,
                                                    int bins, double jitter_sigma_ns = 0.0) {
    std::vector<HistogramBin> out;
    for (int k = 0; k < bins; ++k) {
        const double t = k * bin_ns;
        double v;
        if (jitter_sigma_ns <= 0.0) {
            v = t >= t0_ns ? amplitude * std::exp(-(t - t0_ns) / tau_ns) : 0.0;
        } else {
            // Exponential convolved with a Gaussian (exponentially modified Gaussian).
            const double s = jitter_sigma_ns, x = t - t0_ns;
            v = amplitude * 0.5 * std::exp(s * s / (2 * tau_ns * tau_ns) - x / tau_ns) *
                std::erfc((s / tau_ns - x / s) / std::sqrt(2.0));
        }
        out.push_back({t, v});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Delay correlation

struct DelayCorrelation {
    double r = 0.0;    ///< Pearson coefficient, NaN if either series is constant
    double rms = 0.0;  ///< RMS of measured - predicted
    std::size_t points = 0;
};

/// Linear interpolation of a time-ordered series at t (inside its range).
inline double interpolate(const std::vector<TimedValue> &s, double t) {
    auto it = std::lower_bound(s.begin(), s.end(), t,
                               [](const TimedValue &v, double x) { return v.t_s < x; });
    if (it == s.begin()) return it->value;
    if (it == s.end()) return s.back().value;
    const auto &b = *it, &a = *(it - 1);
    if (b.t_s == a.t_s) return b.value;
    return a.value + (t - a.t_s) / (b.t_s - a.t_s) * (b.value - a.value);
}

/// Compares measured delays against a prediction on the measured time grid,
/// restricted to the overlap of both series.
inline DelayCorrelation delay_correlation(std::vector<TimedValue> measured, std::vector<TimedValue> predicted) {
    auto by_t = [](const TimedValue &a, const TimedValue &b) { return a.t_s < b.t_s; };
    std::sort(measured.begin(), measured.end(), by_t);
    std::sort(predicted.begin(), predicted.end(), by_t);
    if (measured.empty() || predicted.empty()) throw Error(ErrorCode::EmptyOverlap, "empty delay series");
    const double lo = std::max(measured.front().t_s, predicted.front().t_s);
    const double hi = std::min(measured.back().t_s, predicted.back().t_s);
    std::vector<double> m, p;
    for (const auto &v : measured)
        if (v.t_s >= lo && v.t_s <= hi) {
            m.push_back(v.value);
            p.push_back(interpolate(predicted, v.t_s));
        }
    if (m.size() < 2) throw Error(ErrorCode::EmptyOverlap, "series overlap in fewer than two points");
    const double n = static_cast<double>(m.size());
    double mm = 0, pm = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        mm += m[k];
        pm += p[k];
    }
    mm /= n;
    pm /= n;
    double sxy = 0, sxx = 0, syy = 0, sq = 0;
    for (std::size_t k = 0; k < m.size(); ++k) {
        sxy += (m[k] - mm) * (p[k] - pm);
        sxx += (m[k] - mm) * (m[k] - mm);
        syy += (p[k] - pm) * (p[k] - pm);
        sq += (m[k] - p[k]) * (m[k] - p[k]);
    }
    DelayCorrelation out;
    out.points = m.size();
    out.rms = std::sqrt(sq / n);
    out.r = (sxx > 0 && syy > 0) ? sxy / std::sqrt(sxx * syy) : std::numeric_limits<double>::quiet_NaN();
    return out;
}

}  // namespace fiberq
