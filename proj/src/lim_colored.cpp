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

#include "limflow/lim_colored.hpp"

#include "limflow/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace limflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Misfit {
    double misfit = kInf;
    double penalty = 0.0;

    double total() const { return misfit + penalty; }
};

// The fast path shares one step kernel across the window:
// W((k+1) dt) = e^{dt A} W(k dt) + e^{-k dt / tau} W(dt).
Misfit evaluate(const LaggedCorrelation& k, const std::vector<double>& weights,
                const FitConfig& cfg, const Matrix& a, double tau) {
    Misfit out;
    if (!a.allFinite() || !(tau > 0.0) || !std::isfinite(tau)) {
        return out;
    }
    try {
        const Vector scales = detail::residual_scales(k);
        const double abscissa = spectral_abscissa(a);
        if (abscissa > 0.0) {
            out.penalty += cfg.stability_penalty * abscissa * abscissa;
        }
        const Matrix b = memory_factor(a, tau);
        const Matrix qc = colored_diffusion(a, tau, k.cov);
        // Definiteness is judged in the same units as the misfit.
        const double min_eig = min_symmetric_eigenvalue(
            Matrix(scales.asDiagonal() * qc * scales.asDiagonal()));
        if (min_eig < 0.0) {
            out.penalty += cfg.diffusion_penalty * -min_eig;
        }
        const Matrix noise = qc * b.transpose();
        const Matrix step = expm(a, k.dt);
        const Matrix step_kernel = memory_kernel(a, tau, k.dt);
        Matrix propagator = step;
        Matrix kernel = step_kernel;
        double misfit = 0.0;
        for (std::size_t s = 1; s <= weights.size(); ++s) {
            if (s > 1) {
                kernel = step * kernel +
                         std::exp(-static_cast<double>(s - 1) * k.dt / tau) * step_kernel;
                propagator = step * propagator;
            }
            if (weights[s - 1] > 0.0) {
                const Matrix model = propagator * k.cov + kernel * noise;
                misfit += weights[s - 1] *
                          (scales.asDiagonal() * (k.at(static_cast<Index>(s)) - model) *
                           scales.asDiagonal())
                              .squaredNorm();
            }
        }
        out.misfit = std::isfinite(misfit) ? misfit : kInf;
    } catch (const Error&) {
        out.misfit = kInf;
    }
    return out;
}

double clamp_log_tau(double log_tau, const TauBounds& bounds) {
    return std::clamp(log_tau, std::log(bounds.lower), std::log(bounds.upper));
}

}  // namespace

Matrix ColoredModel::B() const { return memory_factor(A, tau); }

TauBounds tau_bounds(double dt, double window) { return {1e-3 * dt, 10.0 * window}; }

Matrix memory_factor(const Matrix& a, double tau) {
    if (!(tau >= 0.0) || !std::isfinite(tau)) {
        throw Error(ErrorCode::invalid_argument, "memory_factor: tau must be >= 0");
    }
    const Index n = a.rows();
    if (tau == 0.0) {
        return Matrix::Identity(n, n);
    }
    const Matrix m = Matrix::Identity(n, n) - tau * a;
    Eigen::FullPivLU<Matrix> lu(m);
    if (!lu.isInvertible()) {
        throw Error(ErrorCode::singular, "memory_factor: I - tau A is singular");
    }
    return lu.inverse();
}

Matrix colored_diffusion(const Matrix& a, double tau, const Matrix& c) {
    if (tau == 0.0) {
        return white_diffusion(a, c);
    }
    const Matrix b = memory_factor(a, tau);
    return symmetrize(solve_two_sided(b, -(a * c + c * a.transpose())));
}

Matrix memory_kernel(const Matrix& a, double tau, double s) {
    if (!(s >= 0.0) || !(tau >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "memory_kernel: s and tau must be >= 0");
    }
    const Index n = a.rows();
    if (s == 0.0 || tau == 0.0) {
        return Matrix::Zero(n, n);
    }
    const Matrix ident = Matrix::Identity(n, n);
    const Matrix g = a + ident / tau;
    const Matrix prop = expm(a, s);
    const double sg_norm = s * g.cwiseAbs().colwise().sum().maxCoeff();

    Matrix w;
    if (sg_norm <= 0.5) {
        // int_0^s e^{-uG} du = sum_m (-G)^m s^{m+1} / (m+1)!
        Matrix term = s * ident;
        Matrix series = term;
        for (int m = 1; m < 40; ++m) {
            term = (-s / (m + 1.0)) * (g * term);
            series += term;
            if (term.cwiseAbs().maxCoeff() <= 1e-18 * series.cwiseAbs().maxCoeff()) {
                break;
            }
        }
        w = prop * series;
    } else {
        Eigen::JacobiSVD<Matrix> svd(g);
        const auto& sv = svd.singularValues();
        if (sv(sv.size() - 1) > 1e-8 * sv(0)) {
            w = g.partialPivLu().solve(prop - std::exp(-s / tau) * ident);
        } else {
            // Near-resonant G: read W off the block exponential of
            // [[A, I], [0, -I/tau]].
            Matrix block = Matrix::Zero(2 * n, 2 * n);
            block.topLeftCorner(n, n) = a;
            block.topRightCorner(n, n) = ident;
            block.bottomRightCorner(n, n) = -ident / tau;
            w = expm(block, s).topRightCorner(n, n);
        }
    }
    require_finite(w, "memory_kernel");
    return w;
}

std::vector<Matrix> colored_correlation(const Matrix& a, double tau, const Matrix& qc,
                                        const Matrix& c, std::span<const double> lags) {
    if (!(spectral_abscissa(a) < 0.0)) {
        throw Error(ErrorCode::invalid_argument, "colored_correlation: dynamics are not stable");
    }
    const Matrix noise = qc * memory_factor(a, tau).transpose();
    std::vector<Matrix> out;
    out.reserve(lags.size());
    for (double s : lags) {
        if (s == 0.0) {
            out.push_back(c);
            continue;
        }
        Matrix k = expm(a, s) * c + memory_kernel(a, tau, s) * noise;
        require_finite(k, "colored_correlation");
        out.push_back(std::move(k));
    }
    return out;
}

LaggedCorrelation colored_correlation(const Matrix& a, double tau, const Matrix& qc,
                                      const Matrix& c, double dt, Index max_lag) {
    if (!(spectral_abscissa(a) < 0.0)) {
        throw Error(ErrorCode::invalid_argument, "colored_correlation: dynamics are not stable");
    }
    LaggedCorrelation out;
    out.dt = dt;
    out.cov = c;
    out.mats.push_back(c);
    const Matrix noise = qc * memory_factor(a, tau).transpose();
    const Matrix step = expm(a, dt);
    const Matrix step_kernel = memory_kernel(a, tau, dt);
    Matrix propagator = step;
    Matrix kernel = step_kernel;
    for (Index s = 1; s <= max_lag; ++s) {
        if (s > 1) {
            kernel = step * kernel + (tau > 0.0 ? std::exp(-static_cast<double>(s - 1) * dt / tau)
                                                : 0.0) *
                                         step_kernel;
            propagator = step * propagator;
        }
        Matrix k = propagator * c + kernel * noise;
        require_finite(k, "colored_correlation");
        out.mats.push_back(std::move(k));
    }
    return out;
}

double colored_objective(const LaggedCorrelation& k, const FitConfig& cfg, const Matrix& a,
                         double tau) {
    return evaluate(k, detail::window_weights(k, cfg), cfg, a, tau).total();
}

ColoredModel fit_colored(const LaggedCorrelation& k, const FitConfig& cfg,
                         const WhiteModel* warm) {
    const Index n = k.variables();
    const auto weights = detail::window_weights(k, cfg);
    const TauBounds bounds = tau_bounds(k.dt, cfg.window);

    const WhiteModel white = warm != nullptr ? *warm : fit_white(k, cfg);

    const auto objective = [&](const Vector& v) {
        const double log_tau = v(v.size() - 1);
        const double clamped = clamp_log_tau(log_tau, bounds);
        const Misfit m = evaluate(k, weights, cfg, detail::unflatten(v.head(n * n), n),
                                  std::exp(clamped));
        const double excess = log_tau - clamped;
        return m.total() + cfg.stability_penalty * excess * excess;
    };
    const auto pack = [&](const Matrix& a, double tau) {
        Vector v(n * n + 1);
        v.head(n * n) = detail::flatten(a);
        v(n * n) = std::log(tau);
        return v;
    };

    // Red noise slows the apparent decay, so the white drift underestimates |A|. Scan tau
    // jointly with a scale factor on the white drift and keep the best tau per scale.
    constexpr int kScanPoints = 41;
    constexpr int kScalePoints = 9;
    constexpr double kMaxScale = 8.0;
    std::vector<std::pair<double, double>> scan_starts;
    for (int j = 0; j < kScalePoints; ++j) {
        const double scale = std::pow(kMaxScale, static_cast<double>(j) / (kScalePoints - 1));
        const Matrix a = scale * white.A;
        double scan_tau = k.dt;
        double scan_best = kInf;
        for (int i = 0; i < kScanPoints; ++i) {
            const double frac = static_cast<double>(i) / (kScanPoints - 1);
            const double tau = std::exp(std::log(bounds.lower) +
                                        frac * (std::log(bounds.upper) - std::log(bounds.lower)));
            const double value = evaluate(k, weights, cfg, a, tau).total();
            if (value < scan_best) {
                scan_best = value;
                scan_tau = tau;
            }
        }
        scan_starts.emplace_back(scale, scan_tau);
    }

    struct Start {
        Vector x;
        double value;
    };
    std::vector<Start> starts;
    const auto add_start = [&](const Matrix& a, double tau) {
        Vector x = pack(a, tau);
        const double value = objective(x);
        starts.push_back({std::move(x), value});
    };
    add_start(white.A, k.dt);
    for (const auto& [scale, tau] : scan_starts) {
        add_start(scale * white.A, tau);
    }
    for (const Matrix& a0 : detail::initial_guesses(k, cfg)) {
        add_start(a0, k.dt);
    }
    std::stable_sort(starts.begin(), starts.end(),
                     [](const Start& x, const Start& y) { return x.value < y.value; });
    const auto keep = static_cast<std::size_t>(std::max(cfg.max_colored_starts, 1));
    if (starts.size() > keep) {
        starts.resize(keep);
    }

    std::ostringstream diagnostics;
    Vector best_x;
    double best_value = kInf;
    for (std::size_t i = 0; i < starts.size(); ++i) {
        const auto result = nelder_mead(objective, starts[i].x, cfg.optimizer);
        const Matrix a = detail::unflatten(result.x.head(n * n), n);
        const double abscissa = a.allFinite() ? spectral_abscissa(a) : kInf;
        diagnostics << " start " << i << ": objective " << result.value << ", abscissa "
                    << abscissa << ";";
        if (abscissa < 0.0 && result.value < best_value) {
            best_value = result.value;
            best_x = result.x;
        }
    }
    if (!std::isfinite(best_value)) {
        throw Error(ErrorCode::fit_failure,
                    "fit_colored: no start converged to stable dynamics;" + diagnostics.str());
    }

    ColoredModel model;
    model.A = detail::unflatten(best_x.head(n * n), n);
    model.tau = std::exp(clamp_log_tau(best_x(n * n), bounds));
    model.C = k.cov;
    model.Qc = colored_diffusion(model.A, model.tau, model.C);
    model.fit_residual = evaluate(k, weights, cfg, model.A, model.tau).misfit;
    model.white_limit = model.tau <= k.dt;
    model.qc_positive_definite = is_spd(model.Qc, 0.0);
    return model;
}

}  // namespace limflow
