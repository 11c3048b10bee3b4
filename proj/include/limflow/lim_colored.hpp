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

#include "limflow/lim_white.hpp"

#include <span>
#include <vector>

namespace limflow {

/// Linear dynamics driven by Ornstein-Uhlenbeck noise with correlation time tau.
struct ColoredModel {
    Matrix A;
    double tau = 0.0;
    Matrix Qc;
    Matrix C;
    double fit_residual = 0.0;
    /// Set when tau fell to or below the sampling interval; the noise memory is
    /// then not resolved by the data and the fit is effectively white.
    bool white_limit = false;
    bool qc_positive_definite = true;

    /// Memory factor (I - tau A)^{-1}, always derived from A and tau.
    Matrix B() const;
};

struct TauBounds {
    double lower = 0.0;
    double upper = 0.0;
};

/// Search range for tau: [1e-3 dt, 10 window].
TauBounds tau_bounds(double dt, double window);

/// B = (I - tau A)^{-1}; B = I exactly at tau = 0.
Matrix memory_factor(const Matrix& a, double tau);

/// Qc solving B Qc + Qc B^T = -(A C + C A^T). Equals white_diffusion at tau = 0.
Matrix colored_diffusion(const Matrix& a, double tau, const Matrix& c);

/// W(s) = int_0^s e^{(s-u)A} e^{-u/tau} du, so that the correlation function
/// reads K(s) = e^{sA} C + W(s) Qc B^T.
Matrix memory_kernel(const Matrix& a, double tau, double s);

std::vector<Matrix> colored_correlation(const Matrix& a, double tau, const Matrix& qc,
                                        const Matrix& c, std::span<const double> lags);
LaggedCorrelation colored_correlation(const Matrix& a, double tau, const Matrix& qc,
                                      const Matrix& c, double dt, Index max_lag);

/// Window misfit of the colored model with Qc recomputed from (A, tau, C_obs),
/// plus stability and diffusion penalties.
double colored_objective(const LaggedCorrelation& k, const FitConfig& cfg, const Matrix& a,
                         double tau);

/// Joint fit of (A, tau). When `warm` is null the white fit is computed first
/// and used as one of the starts.
ColoredModel fit_colored(const LaggedCorrelation& k, const FitConfig& cfg,
                         const WhiteModel* warm = nullptr);

}  // namespace limflow
