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
#include "limflow/optimize.hpp"
#include "limflow/timeseries.hpp"

#include <span>
#include <vector>

namespace limflow {

/// Settings shared by the white and colored correlation fits.
struct FitConfig {
    /// Length l of the fitting window, in the time unit of dt.
    double window = 4.0;
    /// One non-negative weight per lag in (0, window]; empty means uniform.
    std::vector<double> weights;
    OptimizerConfig optimizer;
    /// Lags rho for the matrix-log initial guesses; empty means every lag in
    /// the window.
    std::vector<double> init_lags;
    double stability_penalty = 1e4;
    /// Colored fit only: weight on the most negative eigenvalue of Qc.
    double diffusion_penalty = 1e2;
    /// Colored fit only: at most this many of the best starts are refined.
    int max_colored_starts = 6;
};

struct WhiteModel {
    Matrix A;
    Matrix Q;
    Matrix C;
    double fit_residual = 0.0;
    /// False when sampling error pushed Q off the positive definite cone.
    bool q_positive_definite = true;
};

/// A0(rho) = log(K(rho) C^{-1}) / rho. Throws branch_failure if the principal
/// logarithm does not exist at this lag.
Matrix single_lag_dynamics(const LaggedCorrelation& k, double rho);

/// K(s) = e^{sA} C for each requested time s >= 0.
std::vector<Matrix> white_correlation(const Matrix& a, const Matrix& c,
                                      std::span<const double> lags);
LaggedCorrelation white_correlation(const Matrix& a, const Matrix& c, double dt, Index max_lag);

/// Q = -(A C + C A^T) / 2.
Matrix white_diffusion(const Matrix& a, const Matrix& c);

/// Weighted sum of squared Frobenius misfits over the window, plus the
/// stability penalty.
double white_objective(const LaggedCorrelation& k, const FitConfig& cfg, const Matrix& a);

/// Windowed multi-start fit of e^{sA} C_obs to the observed correlations.
WhiteModel fit_white(const LaggedCorrelation& k, const FitConfig& cfg);

namespace detail {

/// Validated per-lag weights for lags 1..steps.
std::vector<double> window_weights(const LaggedCorrelation& k, const FitConfig& cfg);

/// Reciprocal standard deviations of the lag-zero covariance. Residual entries (i, j) are
/// multiplied by r_i r_j so the misfit does not depend on the units of each variable.
Vector residual_scales(const LaggedCorrelation& k);

/// Matrix-log starting points that exist (branch failures are skipped).
std::vector<Matrix> initial_guesses(const LaggedCorrelation& k, const FitConfig& cfg);

Vector flatten(const Matrix& a);
Matrix unflatten(const Vector& v, Index n);

}  // namespace detail

}  // namespace limflow
