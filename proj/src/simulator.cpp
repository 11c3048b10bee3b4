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

#include "limflow/simulator.hpp"

#include "limflow/error.hpp"
#include "limflow/lim_colored.hpp"

#include <cmath>
#include <random>

namespace limflow {

void validate(const SimSpec& spec) {
    const Index n = spec.A.rows();
    if (n == 0 || spec.A.cols() != n || spec.Q.rows() != n || spec.Q.cols() != n) {
        throw Error(ErrorCode::invalid_argument, "simulate: A and Q must be square and equal size");
    }
    require_finite(spec.A, "simulate");
    require_finite(spec.Q, "simulate");
    if (!(spectral_abscissa(spec.A) < 0.0)) {
        throw Error(ErrorCode::invalid_argument, "simulate: A is not stable");
    }
    if (!is_spd(spec.Q, 0.0)) {
        throw Error(ErrorCode::invalid_argument,
                    "simulate: Q must be symmetric positive definite");
    }
    if (!(spec.tau >= 0.0) || !std::isfinite(spec.tau)) {
        throw Error(ErrorCode::invalid_argument, "simulate: tau must be finite and >= 0");
    }
    if (!(spec.dt > 0.0) || !std::isfinite(spec.dt)) {
        throw Error(ErrorCode::invalid_argument, "simulate: dt must be positive");
    }
    if (spec.steps < 1 || spec.burn_in < 0) {
        throw Error(ErrorCode::invalid_argument, "simulate: steps >= 1 and burn_in >= 0 required");
    }
}

Matrix stationary_covariance(const SimSpec& spec) {
    validate(spec);
    if (spec.tau == 0.0) {
        return solve_two_sided(spec.A, -2.0 * spec.Q);
    }
    const Matrix b = memory_factor(spec.A, spec.tau);
    return solve_two_sided(spec.A, -(spec.Q * b.transpose() + b * spec.Q));
}

Matrix augmented_dynamics(const SimSpec& spec) {
    validate(spec);
    if (spec.tau == 0.0) {
        return spec.A;
    }
    const Index n = spec.A.rows();
    Matrix l = Matrix::Zero(2 * n, 2 * n);
    l.topLeftCorner(n, n) = spec.A;
    l.topRightCorner(n, n) = psd_sqrt(2.0 * spec.Q);
    l.bottomRightCorner(n, n) = -Matrix::Identity(n, n) / spec.tau;
    return l;
}

Matrix augmented_stationary_covariance(const SimSpec& spec) {
    const Matrix c = stationary_covariance(spec);
    if (spec.tau == 0.0) {
        return c;
    }
    const Index n = spec.A.rows();
    // <x eta^T> = B sqrt(2Qc) / 2 and <eta eta^T> = I / (2 tau).
    const Matrix cross = 0.5 * memory_factor(spec.A, spec.tau) * psd_sqrt(2.0 * spec.Q);
    Matrix sigma(2 * n, 2 * n);
    sigma.topLeftCorner(n, n) = c;
    sigma.topRightCorner(n, n) = cross;
    sigma.bottomLeftCorner(n, n) = cross.transpose();
    sigma.bottomRightCorner(n, n) = Matrix::Identity(n, n) / (2.0 * spec.tau);
    return sigma;
}

AugmentedPath simulate_augmented(const SimSpec& spec) {
    validate(spec);
    const Index n = spec.A.rows();
    const Matrix drift = augmented_dynamics(spec);
    const Matrix sigma = augmented_stationary_covariance(spec);
    const Index m = drift.rows();

    Matrix transition;
    Matrix shock_root;
    if (spec.scheme == SimScheme::exact) {
        transition = expm(drift, spec.dt);
        shock_root = psd_sqrt(sigma - transition * sigma * transition.transpose());
    } else {
        transition = Matrix::Identity(m, m) + spec.dt * drift;
        Matrix diffusion = Matrix::Zero(m, m);
        if (spec.tau == 0.0) {
            diffusion = 2.0 * spec.Q;
        } else {
            diffusion.bottomRightCorner(n, n) =
                Matrix::Identity(n, n) / (spec.tau * spec.tau);
        }
        shock_root = psd_sqrt(spec.dt * diffusion);
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector draw(m);
    const auto gaussian = [&]() -> const Vector& {
        for (Index i = 0; i < m; ++i) {
            draw(i) = normal(rng);
        }
        return draw;
    };

    Vector z = psd_sqrt(sigma) * gaussian();
    for (Index k = 0; k < spec.burn_in; ++k) {
        z = transition * z + shock_root * gaussian();
    }

    Matrix path(m, spec.steps);
    path.col(0) = z;
    for (Index k = 1; k < spec.steps; ++k) {
        z = transition * z + shock_root * gaussian();
        path.col(k) = z;
    }
    require_finite(path, "simulate");

    AugmentedPath out;
    out.state.dt = spec.dt;
    out.state.data = path.topRows(n);
    out.noise = path.bottomRows(m - n);
    return out;
}

TimeSeriesMatrix simulate(const SimSpec& spec) { return simulate_augmented(spec).state; }

}  // namespace limflow
