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

#include <cstdint>
#include <functional>

namespace limflow {

struct OptimizerConfig {
    int max_iters = 4000;
    /// Initial simplex edge relative to max(|x_i|, 1) per coordinate.
    double simplex_scale = 0.1;
    /// Extra runs restarted from a perturbed copy of the incumbent.
    int restarts = 2;
    /// Convergence: objective spread across the simplex below tol * (1 + |f_best|).
    double tol = 1e-14;
    std::uint64_t seed = 20240917;
};

struct OptimizeResult {
    Vector x;
    double value = 0.0;
    int evaluations = 0;
};

using Objective = std::function<double(const Vector&)>;

/// Derivative-free Nelder-Mead simplex search. Non-finite objective values
/// are treated as +inf. Deterministic for a fixed seed.
OptimizeResult nelder_mead(const Objective& f, const Vector& x0, const OptimizerConfig& cfg);

}  // namespace limflow
