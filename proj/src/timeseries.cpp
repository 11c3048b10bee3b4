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

#include "limflow/timeseries.hpp"

#include "limflow/error.hpp"

#include <cmath>
#include <string>

namespace limflow {

namespace {

void require_valid(const TimeSeriesMatrix& x, Index min_length, const char* what) {
    if (x.variables() < 1) {
        throw Error(ErrorCode::invalid_argument, std::string(what) + ": no variables");
    }
    if (!(x.dt > 0.0) || !std::isfinite(x.dt)) {
        throw Error(ErrorCode::invalid_argument, std::string(what) + ": dt must be positive");
    }
    if (x.length() < min_length) {
        throw Error(ErrorCode::insufficient_data,
                    std::string(what) + ": need at least " + std::to_string(min_length) +
                        " samples, got " + std::to_string(x.length()));
    }
    require_finite(x.data, what);
}

}  // namespace

TimeSeriesMatrix remove_climatology(const TimeSeriesMatrix& x, int period) {
    if (period < 1) {
        throw Error(ErrorCode::invalid_argument, "remove_climatology: period must be >= 1");
    }
    require_valid(x, 1, "remove_climatology");
    if (x.length() < period) {
        throw Error(ErrorCode::insufficient_data,
                    "remove_climatology: series shorter than one period");
    }
    const Index n = x.variables();
    const Index len = x.length();
    const auto phase_of = [&](Index t) {
        const long long p = (static_cast<long long>(x.t0_phase) + t) % period;
        return static_cast<Index>(p < 0 ? p + period : p);
    };

    Matrix sums = Matrix::Zero(n, period);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(period);
    for (Index t = 0; t < len; ++t) {
        const Index p = phase_of(t);
        sums.col(p) += x.data.col(t);
        counts(p) += 1.0;
    }
    for (Index p = 0; p < period; ++p) {
        sums.col(p) /= counts(p);
    }

    TimeSeriesMatrix out = x;
    for (Index t = 0; t < len; ++t) {
        out.data.col(t) -= sums.col(phase_of(t));
    }
    return out;
}

TimeSeriesMatrix running_mean(const TimeSeriesMatrix& x, int width) {
    if (width < 1 || width % 2 == 0) {
        throw Error(ErrorCode::invalid_argument,
                    "running_mean: width must be a positive odd integer");
    }
    require_valid(x, width, "running_mean");
    const Index out_len = x.length() - width + 1;
    TimeSeriesMatrix out;
    out.dt = x.dt;
    out.t0_phase = x.t0_phase + width / 2;
    out.data.resize(x.variables(), out_len);
    for (Index t = 0; t < out_len; ++t) {
        out.data.col(t) = x.data.middleCols(t, width).rowwise().mean();
    }
    return out;
}

TimeSeriesMatrix normalize_variance(const TimeSeriesMatrix& x) {
    require_valid(x, 2, "normalize_variance");
    TimeSeriesMatrix out = x;
    for (Index i = 0; i < x.variables(); ++i) {
        const auto row = x.data.row(i).array();
        const double mean = row.mean();
        const double sd = std::sqrt((row - mean).square().mean());
        if (!(sd > 0.0)) {
            throw Error(ErrorCode::degenerate_variance,
                        "normalize_variance: variable " + std::to_string(i) + " is constant");
        }
        out.data.row(i) /= sd;
    }
    return out;
}

LaggedCorrelation lagged_correlation(const TimeSeriesMatrix& x, Index max_lag) {
    require_valid(x, 2, "lagged_correlation");
    if (max_lag < 0) {
        throw Error(ErrorCode::invalid_argument, "lagged_correlation: negative max lag");
    }
    if (max_lag >= x.length()) {
        throw Error(ErrorCode::insufficient_data,
                    "lagged_correlation: max lag " + std::to_string(max_lag) +
                        " needs more than " + std::to_string(x.length()) + " samples");
    }
    const Index len = x.length();
    const Matrix centered = x.data.colwise() - x.data.rowwise().mean();

    LaggedCorrelation out;
    out.dt = x.dt;
    out.mats.reserve(static_cast<std::size_t>(max_lag) + 1);
    for (Index s = 0; s <= max_lag; ++s) {
        const Index count = len - s;
        out.mats.push_back(centered.middleCols(s, count) *
                           centered.leftCols(count).transpose() / static_cast<double>(count));
    }
    out.mats[0] = symmetrize(out.mats[0]);
    out.cov = out.mats[0];
    return out;
}

ForwardDiffCovariances forward_diff_covariances(const TimeSeriesMatrix& x) {
    require_valid(x, 3, "forward_diff_covariances");
    const Index count = x.length() - 1;
    const Matrix base = x.data.leftCols(count);
    const Matrix deriv = (x.data.rightCols(count) - base) / x.dt;
    const Matrix base_c = base.colwise() - base.rowwise().mean();
    const Matrix deriv_c = deriv.colwise() - deriv.rowwise().mean();

    ForwardDiffCovariances out;
    out.cov = symmetrize(base_c * base_c.transpose() / static_cast<double>(count));
    out.cross = base_c * deriv_c.transpose() / static_cast<double>(count);
    return out;
}

Index window_steps(double window, double dt) {
    if (!(window > 0.0) || !(dt > 0.0)) {
        throw Error(ErrorCode::invalid_argument, "window and dt must be positive");
    }
    const double ratio = window / dt;
    const double rounded = std::round(ratio);
    if (std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio) || rounded < 1.0) {
        throw Error(ErrorCode::invalid_argument,
                    "window " + std::to_string(window) + " is not a positive multiple of dt " +
                        std::to_string(dt));
    }
    return static_cast<Index>(rounded);
}

}  // namespace limflow
