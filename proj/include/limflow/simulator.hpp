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
#include "limflow/timeseries.hpp"

#include <cstdint>

namespace limflow {

enum class SimScheme { exact, euler_maruyama };

/// dx/dt = A x + sqrt(2Q) noise, where the noise is white (tau == 0) or an
/// OU process d(eta)/dt = -eta/tau + xi/tau (tau > 0).
struct SimSpec {
    Matrix A;
    /// White diffusion Q, or the colored diffusion Qc when tau > 0.
    Matrix Q;
    double tau = 0.0;
    double dt = 0.1;
    Index steps = 1000;
    std::uint64_t seed = 1;
    Index burn_in = 0;
    SimScheme scheme = SimScheme::exact;
};

/// Throws invalid_argument on an unstable A, non-SPD Q, or bad sizes.
void validate(const SimSpec& spec);

/// White: A C + C A^T = -2Q. Colored: A C + C A^T = -(Qc B^T + B Qc).
Matrix stationary_covariance(const SimSpec& spec);

/// Drift of the simulated state: A, or [[A, sqrt(2Qc)], [0, -I/tau]].
Matrix augmented_dynamics(const SimSpec& spec);

/// Joint stationary covariance of (x, eta); equals stationary_covariance when white.
Matrix augmented_stationary_covariance(const SimSpec& spec);

struct AugmentedPath {
    TimeSeriesMatrix state;
    /// Hidden OU noise; zero rows for white specs.
    Matrix noise;
};

/// Exact one-step transition z_{k+1} = e^{M dt} z_k + w_k started from the
/// stationary law. Deterministic for a given seed.
AugmentedPath simulate_augmented(const SimSpec& spec);

/// simulate_augmented(spec).state
TimeSeriesMatrix simulate(const SimSpec& spec);

}  // namespace limflow
