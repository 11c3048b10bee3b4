/*
 * Copyright 2026 The limflow Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include "limflow/linalg.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

namespace testsupport {

using limflow::Index;
using limflow::Matrix;

// Reference drift used throughout the suite.
inline Matrix a_dagger() {
    Matrix a(2, 2);
    a << -1.0, 0.5, -0.2, -0.8;
    return a;
}

// Stationary covariance of a_dagger() with Q = I, solved by hand from the
// three scalar Lyapunov equations.
inline Matrix c_dagger() {
    Matrix c(2, 2);
    c << 179.0 / 162.0, 17.0 / 81.0, 17.0 / 81.0, 97.0 / 81.0;
    return c;
}

inline Matrix diag2(double a, double b) {
    Matrix m = Matrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

inline double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

inline void check_close(const Matrix& got, const Matrix& want, double tol) {
    REQUIRE(got.rows() == want.rows());
    REQUIRE(got.cols() == want.cols());
    CHECK(max_abs(got - want) <= tol);
}

// Random matrix with spectrum pushed left of -margin.
inline Matrix random_stable(std::mt19937_64& rng, Index n, double margin = 0.2) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            m(i, j) = g(rng) / std::sqrt(static_cast<double>(n));
        }
    }
    const double shift = limflow::spectral_abscissa(m) + margin;
    return m - shift * Matrix::Identity(n, n);
}

inline Matrix random_spd(std::mt19937_64& rng, Index n) {
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix b(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            b(i, j) = g(rng);
        }
    }
    return b * b.transpose() + 0.1 * Matrix::Identity(n, n);
}

}  // namespace testsupport
