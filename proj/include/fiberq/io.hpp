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

// Dataset serialization. CSV files have a fixed header line and use "%.12g"
// number formatting so that a run is byte-reproducible. Matrices are JSON
// objects {"rows", "cols", "data"} with data a row-major list of [re, im].

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "fiberq/analysis.hpp"
#include "fiberq/errors.hpp"
#include "fiberq/tomography.hpp"

namespace fiberq {

inline std::string fmt_num(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

/// Joins values with commas using fmt_num.
inline std::string csv_row(std::initializer_list<double> values) {
    std::string out;
    bool first = true;
    for (double v : values) {
        if (!first) out += ',';
        out += fmt_num(v);
        first = false;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tomography tables

inline constexpr const char *kTomographyHeader = "basis_a,basis_b,counts,integration_s";

inline void write_tomography_csv(std::ostream &os, const TomographyTable &t) {
    os << kTomographyHeader << '\n';
    for (const auto &r : t)
        os << r.basis_a << ',' << r.basis_b << ',' << fmt_num(r.counts) << ',' << fmt_num(r.integration_s) << '\n';
}

inline TomographyTable read_tomography_csv(std::istream &is) {
    std::string line;
    if (!std::getline(is, line)) throw Error(ErrorCode::InvalidArgument, "tomography CSV: missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kTomographyHeader)
        throw Error(ErrorCode::InvalidArgument, "tomography CSV: expected header '" + std::string(kTomographyHeader) + "'");
    TomographyTable t;
    int lineno = 1;
    while (std::getline(is, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c, d;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b, ',') || !std::getline(ss, c, ',') ||
            !std::getline(ss, d) || a.size() != 1 || b.size() != 1)
            throw Error(ErrorCode::InvalidArgument, "tomography CSV line " + std::to_string(lineno) + ": malformed");
        try {
            basis_stokes(a[0]);
            basis_stokes(b[0]);
            t.push_back({a[0], b[0], std::stod(c), std::stod(d)});
        } catch (const std::exception &e) {
            throw Error(ErrorCode::InvalidArgument,
                        "tomography CSV line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Matrices

template <class M>
nlohmann::json matrix_to_json(const M &m) {
    nlohmann::json data = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const std::complex<double> z = m(i, j);
            data.push_back({z.real(), z.imag()});
        }
    return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", data}};
}

inline Eigen::MatrixXcd matrix_from_json(const nlohmann::json &j) {
    const auto rows = j.at("rows").get<Eigen::Index>(), cols = j.at("cols").get<Eigen::Index>();
    const auto &data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows * cols)
        throw Error(ErrorCode::InvalidArgument, "matrix JSON: data length does not match shape");
    Eigen::MatrixXcd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j2 = 0; j2 < cols; ++j2) {
            const auto &z = data.at(static_cast<size_t>(i * cols + j2));
            m(i, j2) = {z.at(0).get<double>(), z.at(1).get<double>()};
        }
    return m;
}

// ---------------------------------------------------------------------------
// Figure-ready tables

/// tau_s, then one column per level (q90 for 0.90, ...).
inline void write_quantile_curves_csv(std::ostream &os, const QuantileSurface &s) {
    os << "tau_s";
    for (double q : s.levels) {
        char buf[32];
        std::snprintf(buf, sizeof buf, ",q%g", q * 100.0);
        std::string name = buf;
        for (auto &c : name)
            if (c == '.') c = '_';
        os << name;
    }
    os << ",samples\n";
    for (std::size_t c = 0; c < s.tau_s.size(); ++c) {
        os << fmt_num(s.tau_s[c]);
        for (const auto &curve : s.curves) os << ',' << fmt_num(curve[c]);
        os << ',' << s.samples[c] << '\n';
    }
}

/// Long format: tau_s, fp_low, fp_high, incidence.
inline void write_incidence_csv(std::ostream &os, const QuantileSurface &s) {
    os << "tau_s,fp_low,fp_high,incidence\n";
    for (Eigen::Index c = 0; c < s.incidence.cols(); ++c)
        for (Eigen::Index b = 0; b < s.incidence.rows(); ++b)
            os << csv_row({s.tau_s[static_cast<size_t>(c)], s.fp_edges[static_cast<size_t>(b)],
                           s.fp_edges[static_cast<size_t>(b) + 1], s.incidence(b, c)})
               << '\n';
}

inline void write_histogram_csv(std::ostream &os, const Histogram &h, const std::string &label) {
    os << "bin_low,bin_high," << label << "_count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k)
        os << fmt_num(h.edges[k]) << ',' << fmt_num(h.edges[k + 1]) << ',' << h.counts[k] << '\n';
}

}  // namespace fiberq
