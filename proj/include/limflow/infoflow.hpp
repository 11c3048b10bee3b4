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

#include <optional>
#include <vector>

namespace limflow {

enum class FlowMethod { model_based, liang_direct };

/// Information flow rates in nats per time unit. Entry (i, j) is the flow
/// from variable j into variable i.
struct InfoFlowMatrix {
    Matrix T;
    FlowMethod method = FlowMethod::model_based;
    std::optional<double> mask_threshold;

    double flow(Index from, Index to) const { return T(to, from); }
};

enum class FlowLabel { none, excites, stabilizes };

/// label(i, j) classifies the flow from j into i.
struct FlowLabels {
    Index n = 0;
    std::vector<FlowLabel> labels;

    FlowLabel at(Index i, Index j) const { return labels[static_cast<std::size_t>(i * n + j)]; }
};

/// T(i, j) = A_ij C_ij / C_ii.
InfoFlowMatrix info_flow_from_model(const Matrix& a, const Matrix& c);

/// Covariance-only estimator driven by forward-difference covariances,
/// evaluated in its cofactor form.
InfoFlowMatrix info_flow_liang(const ForwardDiffCovariances& cov);
InfoFlowMatrix info_flow_liang(const TimeSeriesMatrix& x);

/// Dynamics implied by the forward-difference estimator, <dx/dt x^T> C^{-1}.
Matrix liang_dynamics(const ForwardDiffCovariances& cov);

/// Matrix of cofactors: cofactor(j, k) = (-1)^{j+k} det(minor_jk).
Matrix cofactor_matrix(const Matrix& m);

/// Strict thresholding: |T| == eps is labelled none.
FlowLabels classify_flows(const InfoFlowMatrix& flows, double eps = 0.0);

const char* to_string(FlowLabel label) noexcept;
const char* to_string(FlowMethod method) noexcept;

}  // namespace limflow
