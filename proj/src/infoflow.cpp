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

#include "limflow/infoflow.hpp"

#include "limflow/error.hpp"

#include <string>

namespace limflow {

namespace {

void require_variances(const Matrix& c, const char* what) {
    for (Index i = 0; i < c.rows(); ++i) {
        if (!(c(i, i) > 0.0)) {
            throw Error(ErrorCode::degenerate_variance,
                        std::string(what) + ": variable " + std::to_string(i) +
                            " has zero variance");
        }
    }
}

}  // namespace

InfoFlowMatrix info_flow_from_model(const Matrix& a, const Matrix& c) {
    if (a.rows() != a.cols() || c.rows() != c.cols() || a.rows() != c.rows()) {
        throw Error(ErrorCode::invalid_argument, "info_flow_from_model: dimension mismatch");
    }
    require_finite(a, "info_flow_from_model");
    require_finite(c, "info_flow_from_model");
    require_variances(c, "info_flow_from_model");
    const Index n = a.rows();
    InfoFlowMatrix out;
    out.method = FlowMethod::model_based;
    out.T.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            out.T(i, j) = i == j ? a(i, i) : a(i, j) * c(i, j) / c(i, i);
        }
    }
    return out;
}

Matrix cofactor_matrix(const Matrix& m) {
    const Index n = m.rows();
    Matrix out(n, n);
    if (n == 1) {
        out(0, 0) = 1.0;
        return out;
    }
    Matrix minor(n - 1, n - 1);
    for (Index r = 0; r < n; ++r) {
        for (Index c = 0; c < n; ++c) {
            for (Index i = 0, mi = 0; i < n; ++i) {
                if (i == r) {
                    continue;
                }
                for (Index j = 0, mj = 0; j < n; ++j) {
                    if (j == c) {
                        continue;
                    }
                    minor(mi, mj++) = m(i, j);
                }
                ++mi;
            }
            out(r, c) = ((r + c) % 2 == 0 ? 1.0 : -1.0) * minor.determinant();
        }
    }
    return out;
}

InfoFlowMatrix info_flow_liang(const ForwardDiffCovariances& cov) {
    const Matrix& c = cov.cov;
    require_finite(c, "info_flow_liang");
    require_finite(cov.cross, "info_flow_liang");
    require_variances(c, "info_flow_liang");
    if (nearly_singular_covariance(c)) {
        throw Error(ErrorCode::singular, "info_flow_liang: covariance is singular");
    }
    const Index n = c.rows();
    const double det = c.determinant();
    const Matrix cof = cofactor_matrix(c);

    InfoFlowMatrix out;
    out.method = FlowMethod::liang_direct;
    out.T.resize(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            double sum = 0.0;
            for (Index k = 0; k < n; ++k) {
                sum += cof(j, k) * cov.cross(k, i);
            }
            out.T(i, j) = sum / det * c(i, j) / c(i, i);
        }
    }
    return out;
}

InfoFlowMatrix info_flow_liang(const TimeSeriesMatrix& x) {
    return info_flow_liang(forward_diff_covariances(x));
}

Matrix liang_dynamics(const ForwardDiffCovariances& cov) {
    if (nearly_singular_covariance(cov.cov)) {
        throw Error(ErrorCode::singular, "liang_dynamics: covariance is singular");
    }
    // <dx x^T> = cross^T; A = cross^T C^{-1} = (C^{-1} cross)^T for symmetric C.
    return cov.cov.ldlt().solve(cov.cross).transpose();
}

FlowLabels classify_flows(const InfoFlowMatrix& flows, double eps) {
    if (!(eps >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "classify_flows: eps must be >= 0");
    }
    FlowLabels out;
    out.n = flows.T.rows();
    out.labels.reserve(static_cast<std::size_t>(flows.T.size()));
    for (Index i = 0; i < out.n; ++i) {
        for (Index j = 0; j < out.n; ++j) {
            const double t = flows.T(i, j);
            out.labels.push_back(t > eps    ? FlowLabel::excites
                                 : t < -eps ? FlowLabel::stabilizes
                                            : FlowLabel::none);
        }
    }
    return out;
}

const char* to_string(FlowLabel label) noexcept {
    switch (label) {
        case FlowLabel::excites: return "excites";
        case FlowLabel::stabilizes: return "stabilizes";
        case FlowLabel::none: return "none";
    }
    return "none";
}

const char* to_string(FlowMethod method) noexcept {
    return method == FlowMethod::liang_direct ? "liang-direct" : "model-based";
}

}  // namespace limflow
