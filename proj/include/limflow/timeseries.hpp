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

#include <string>
#include <vector>

namespace limflow {

/// n state variables (rows) by T samples (columns) at a uniform interval dt.
struct TimeSeriesMatrix {
    Matrix data;
    double dt = 1.0;
    /// Phase of the first sample within the seasonal cycle.
    int t0_phase = 0;

    Index variables() const { return data.rows(); }
    Index length() const { return data.cols(); }
};

/// Sample correlation matrices K(k dt) = <x(t + k dt) x(t)^T>, k = 0..max_lag.
struct LaggedCorrelation {
    double dt = 1.0;
    std::vector<Matrix> mats;
    /// Symmetrized K(0).
    Matrix cov;

    Index max_lag() const { return static_cast<Index>(mats.size()) - 1; }
    Index variables() const { return cov.rows(); }
    const Matrix& at(Index lag) const { return mats.at(static_cast<std::size_t>(lag)); }
};

/// Covariances over the forward-difference index range t = 0..T-2.
struct ForwardDiffCovariances {
    /// Population covariance of x.
    Matrix cov;
    /// cross(k, i) = cov(x_k, dx_i/dt).
    Matrix cross;
};

/// Subtracts the mean of each phase class (t0_phase + t) mod period, per variable.
TimeSeriesMatrix remove_climatology(const TimeSeriesMatrix& x, int period);

/// Centered moving average of odd width; output has T - width + 1 samples.
TimeSeriesMatrix running_mean(const TimeSeriesMatrix& x, int width);

/// Divides every row by its sample standard deviation.
TimeSeriesMatrix normalize_variance(const TimeSeriesMatrix& x);

/// Rows are centered internally; lag s uses the 1/(T - s) normalization.
LaggedCorrelation lagged_correlation(const TimeSeriesMatrix& x, Index max_lag);

ForwardDiffCovariances forward_diff_covariances(const TimeSeriesMatrix& x);

/// Number of lag steps covering (0, window]; window must be a multiple of dt
/// up to rounding.
Index window_steps(double window, double dt);

}  // namespace limflow
