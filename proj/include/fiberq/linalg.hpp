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

#include <complex>

#include <Eigen/Dense>

namespace fiberq {

using Mat4c = Eigen::Matrix4cd;
using Vec4c = Eigen::Vector4cd;
using Mat8c = Eigen::Matrix<std::complex<double>, 8, 8>;

template <class A, class B>
Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic> kron_dynamic(const A &a, const B &b) {
    Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic> out(a.rows() * b.rows(),
                                                                             a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = std::complex<double>(a(i, j)) * b;
    return out;
}

inline Mat4c kron(const Eigen::Matrix2cd &a, const Eigen::Matrix2cd &b) { return kron_dynamic(a, b); }

inline Vec4c kron(const Eigen::Vector2cd &a, const Eigen::Vector2cd &b) {
    Vec4c v;
    v << a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1];
    return v;
}

/// Trace over the second factor of a 2x2 (x) 2x2 operator.
inline Eigen::Matrix2cd partial_trace_second(const Mat4c &m) {
    Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) r(i, j) += m(2 * i + k, 2 * j + k);
    return r;
}

/// Trace over the first factor of a 2x2 (x) 2x2 operator.
inline Eigen::Matrix2cd partial_trace_first(const Mat4c &m) {
    Eigen::Matrix2cd r = Eigen::Matrix2cd::Zero();
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int k = 0; k < 2; ++k) r(i, j) += m(2 * k + i, 2 * k + j);
    return r;
}

/// Hermitian positive square root.
template <class M>
M hermitian_sqrt(const M &a) {
    Eigen::SelfAdjointEigenSolver<M> es(a);
    auto ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
}

/// Uhlmann fidelity (tr sqrt(sqrt(a) b sqrt(a)))^2.
template <class M>
double uhlmann_fidelity(const M &a, const M &b) {
    const M sa = hermitian_sqrt(a);
    const M inner = sa * b * sa;
    Eigen::SelfAdjointEigenSolver<M> es(0.5 * (inner + inner.adjoint()));
    const double s = es.eigenvalues().cwiseMax(0.0).cwiseSqrt().sum();
    return s * s;
}

}  // namespace fiberq
