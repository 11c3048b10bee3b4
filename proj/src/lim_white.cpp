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

#include "limflow/lim_white.hpp"

#include "limflow/error.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <string>

namespace limflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Index lag_index(const LaggedCorrelation& k, double rho) {
    const double ratio = rho / k.dt;
    const double rounded = std::round(ratio);
    if (!(rho > 0.0) || std::abs(ratio - rounded) > 1e-6 * std::max(1.0, ratio)) {
        throw Error(ErrorCode::invalid_argument,
                    "lag " + std::to_string(rho) + " is not a positive multiple of dt");
    }
    const auto idx = static_cast<Index>(rounded);
    if (idx > k.max_lag()) {
        throw Error(ErrorCode::insufficient_data,
                    "lag " + std::to_string(rho) + " exceeds the correlation range");
    }
    return idx;
}

void require_stable(const Matrix& a, const char* what) {
    if (!(spectral_abscissa(a) < 0.0)) {
        throw Error(ErrorCode::invalid_argument, std::string(what) + ": dynamics are not stable");
    }
}

}  // namespace

namespace detail {

std::vector<double> window_weights(const LaggedCorrelation& k, const FitConfig& cfg) {
    const Index steps = window_steps(cfg.window, k.dt);
    if (steps > k.max_lag()) {
        throw Error(ErrorCode::insufficient_data,
                    "fit window " + std::to_string(cfg.window) +
                        " exceeds the lagged correlation range " +
                        std::to_string(static_cast<double>(k.max_lag()) * k.dt));
    }
    if (cfg.weights.empty()) {
        return std::vector<double>(static_cast<std::size_t>(steps), 1.0);
    }
    if (static_cast<Index>(cfg.weights.size()) != steps) {
        throw Error(ErrorCode::invalid_argument,
                    "expected " + std::to_string(steps) + " lag weights, got " +
                        std::to_string(cfg.weights.size()));
    }
    bool any_positive = false;
    for (double w : cfg.weights) {
        if (!(w >= 0.0) || !std::isfinite(w)) {
            throw Error(ErrorCode::invalid_argument, "lag weights must be finite and >= 0");
        }
        any_positive = any_positive || w > 0.0;
    }
    if (!any_positive) {
        throw Error(ErrorCode::invalid_argument, "lag weights are all zero");
    }
    return cfg.weights;
}

Vector residual_scales(const LaggedCorrelation& k) {
    const Vector var = k.cov.diagonal();
    if (!(var.minCoeff() > 0.0) || !var.allFinite()) {
        throw Error(ErrorCode::degenerate_variance, "lag-zero covariance has a zero variance");
    }
    return var.cwiseSqrt().cwiseInverse();
}

std::vector<Matrix> initial_guesses(const LaggedCorrelation& k, const FitConfig& cfg) {
    std::vector<double> lags = cfg.init_lags;
    if (lags.empty()) {
        const Index steps = window_steps(cfg.window, k.dt);
        for (Index s = 1; s <= steps; ++s) {
            lags.push_back(static_cast<double>(s) * k.dt);
        }
    }
    std::vector<Matrix> guesses;
    for (double rho : lags) {
        try {
            Matrix a0 = single_lag_dynamics(k, rho);
            if (a0.allFinite()) {
                guesses.push_back(std::move(a0));
            }
        } catch (const Error& e) {
            if (e.code() != ErrorCode::branch_failure &&
                e.code() != ErrorCode::computation_failure) {
                throw;
            }
        }
    }
    return guesses;
}

Vector flatten(const Matrix& a) { return Eigen::Map<const Vector>(a.data(), a.size()); }

Matrix unflatten(const Vector& v, Index n) { return Eigen::Map<const Matrix>(v.data(), n, n); }

}  // namespace detail

Matrix single_lag_dynamics(const LaggedCorrelation& k, double rho) {
    const Index idx = lag_index(k, rho);
    if (nearly_singular_covariance(k.cov)) {
        throw Error(ErrorCode::singular, "single_lag_dynamics: covariance is singular");
    }
    // K(rho) C^{-1}, computed as (C^{-T} K(rho)^T)^T.
    const Matrix propagator =
        k.cov.transpose().partialPivLu().solve(k.at(idx).transpose()).transpose();
    return logm_principal(propagator) / (static_cast<double>(idx) * k.dt);
}

std::vector<Matrix> white_correlation(const Matrix& a, const Matrix& c,
                                      std::span<const double> lags) {
    require_stable(a, "white_correlation");
    std::vector<Matrix> out;
    out.reserve(lags.size());
    for (double s : lags) {
        out.push_back(s == 0.0 ? c : Matrix(expm(a, s) * c));
    }
    return out;
}

LaggedCorrelation white_correlation(const Matrix& a, const Matrix& c, double dt, Index max_lag) {
    require_stable(a, "white_correlation");
    LaggedCorrelation out;
    out.dt = dt;
    out.cov = c;
    out.mats.push_back(c);
    const Matrix step = expm(a, dt);
    Matrix current = c;
    for (Index s = 1; s <= max_lag; ++s) {
        current = step * current;
        out.mats.push_back(current);
    }
    return out;
}

Matrix white_diffusion(const Matrix& a, const Matrix& c) {
    return symmetrize(-0.5 * (a * c + c * a.transpose()));
}

namespace {

double white_objective_impl(const LaggedCorrelation& k, const std::vector<double>& weights,
                            const Vector& scales, double stability_penalty, const Matrix& a) {
    if (!a.allFinite()) {
        return kInf;
    }
    double value = 0.0;
    try {
        const double abscissa = spectral_abscissa(a);
        if (abscissa > 0.0) {
            value += stability_penalty * abscissa * abscissa;
        }
        const Matrix step = expm(a, k.dt);
        Matrix model = k.cov;
        for (std::size_t s = 1; s <= weights.size(); ++s) {
            model = step * model;
            if (weights[s - 1] > 0.0) {
                value += weights[s - 1] *
                         (scales.asDiagonal() * (k.at(static_cast<Index>(s)) - model) *
                          scales.asDiagonal())
                             .squaredNorm();
            }
        }
    } catch (const Error&) {
        return kInf;
    }
    return std::isfinite(value) ? value : kInf;
}

}  // namespace

double white_objective(const LaggedCorrelation& k, const FitConfig& cfg, const Matrix& a) {
    return white_objective_impl(k, detail::window_weights(k, cfg), detail::residual_scales(k),
                                cfg.stability_penalty, a);
}

WhiteModel fit_white(const LaggedCorrelation& k, const FitConfig& cfg) {
    const Index n = k.variables();
    const auto weights = detail::window_weights(k, cfg);
    const Vector scales = detail::residual_scales(k);
    std::vector<Matrix> starts = detail::initial_guesses(k, cfg);
    if (starts.empty()) {
        starts.push_back(-Matrix::Identity(n, n) / cfg.window);
    }

    const auto objective = [&](const Vector& v) {
        return white_objective_impl(k, weights, scales, cfg.stability_penalty,
                                    detail::unflatten(v, n));
    };

    std::ostringstream diagnostics;
    Matrix best_a;
    double best_value = kInf;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const auto result = nelder_mead(objective, detail::flatten(starts[i]), cfg.optimizer);
        const Matrix a = detail::unflatten(result.x, n);
        const double abscissa = a.allFinite() ? spectral_abscissa(a) : kInf;
        diagnostics << " start " << i << ": objective " << result.value << ", abscissa "
                    << abscissa << ";";
        if (abscissa < 0.0 && result.value < best_value) {
            best_value = result.value;
            best_a = a;
        }
    }
    if (!std::isfinite(best_value)) {
        throw Error(ErrorCode::fit_failure,
                    "fit_white: no start converged to stable dynamics;" + diagnostics.str());
    }

    WhiteModel model;
    model.A = best_a;
    model.C = k.cov;
    model.Q = white_diffusion(model.A, model.C);
    model.fit_residual = best_value;
    model.q_positive_definite = is_spd(model.Q, 0.0);
    return model;
}

}  // namespace limflow
