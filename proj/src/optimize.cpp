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

#include "limflow/optimize.hpp"

#include "limflow/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <vector>

namespace limflow {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Simplex {
    std::vector<Vector> points;
    std::vector<double> values;
};

class Counted {
public:
    explicit Counted(const Objective& f) : f_(f) {}

    double operator()(const Vector& x) {
        ++count_;
        const double v = f_(x);
        return std::isfinite(v) ? v : kInf;
    }

    int count() const { return count_; }

private:
    const Objective& f_;
    int count_ = 0;
};

// One Nelder-Mead run with dimension-adaptive coefficients.
OptimizeResult run_once(Counted& f, const Vector& x0, const Vector& steps, int max_iters,
                        double tol) {
    const Index dim = x0.size();
    const double d = static_cast<double>(dim);
    const double reflect = 1.0;
    const double expand = 1.0 + 2.0 / d;
    const double contract = 0.75 - 1.0 / (2.0 * d);
    const double shrink = 1.0 - 1.0 / d;

    Simplex s;
    s.points.push_back(x0);
    for (Index i = 0; i < dim; ++i) {
        Vector p = x0;
        p(i) += steps(i);
        s.points.push_back(std::move(p));
    }
    for (const auto& p : s.points) {
        s.values.push_back(f(p));
    }

    std::vector<std::size_t> order(s.points.size());
    for (int iter = 0; iter < max_iters; ++iter) {
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return s.values[a] < s.values[b]; });
        Simplex sorted;
        for (auto idx : order) {
            sorted.points.push_back(s.points[idx]);
            sorted.values.push_back(s.values[idx]);
        }
        s = std::move(sorted);

        const double best = s.values.front();
        const double worst = s.values.back();
        double diameter = 0.0;
        for (std::size_t i = 1; i < s.points.size(); ++i) {
            diameter = std::max(diameter, (s.points[i] - s.points[0]).cwiseAbs().maxCoeff());
        }
        const double xscale = 1.0 + s.points[0].cwiseAbs().maxCoeff();
        if (std::isfinite(worst) && worst - best <= tol * (1.0 + std::abs(best)) &&
            diameter <= 1e-10 * xscale) {
            break;
        }

        Vector centroid = Vector::Zero(dim);
        for (Index i = 0; i < dim; ++i) {
            centroid += s.points[static_cast<std::size_t>(i)];
        }
        centroid /= d;

        const Vector& worst_point = s.points.back();
        const Vector xr = centroid + reflect * (centroid - worst_point);
        const double fr = f(xr);
        const double second_worst = s.values[s.values.size() - 2];

        if (fr < best) {
            const Vector xe = centroid + expand * (xr - centroid);
            const double fe = f(xe);
            if (fe < fr) {
                s.points.back() = xe;
                s.values.back() = fe;
            } else {
                s.points.back() = xr;
                s.values.back() = fr;
            }
            continue;
        }
        if (fr < second_worst) {
            s.points.back() = xr;
            s.values.back() = fr;
            continue;
        }

        const bool outside = fr < worst;
        const Vector xc = outside ? Vector(centroid + contract * (xr - centroid))
                                  : Vector(centroid + contract * (worst_point - centroid));
        const double fc = f(xc);
        if (fc < (outside ? fr : worst)) {
            s.points.back() = xc;
            s.values.back() = fc;
            continue;
        }

        for (std::size_t i = 1; i < s.points.size(); ++i) {
            s.points[i] = s.points[0] + shrink * (s.points[i] - s.points[0]);
            s.values[i] = f(s.points[i]);
        }
    }

    const auto best_it = std::min_element(s.values.begin(), s.values.end());
    const auto best_idx = static_cast<std::size_t>(best_it - s.values.begin());
    return {s.points[best_idx], *best_it, 0};
}

}  // namespace

OptimizeResult nelder_mead(const Objective& f, const Vector& x0, const OptimizerConfig& cfg) {
    if (x0.size() == 0) {
        throw Error(ErrorCode::invalid_argument, "nelder_mead: empty parameter vector");
    }
    if (cfg.max_iters < 1 || cfg.simplex_scale <= 0.0 || cfg.restarts < 0 || cfg.tol < 0.0) {
        throw Error(ErrorCode::invalid_argument, "nelder_mead: invalid optimizer config");
    }
    Counted counted(f);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);

    const auto steps_for = [&](const Vector& x, double scale) {
        Vector steps(x.size());
        for (Index i = 0; i < x.size(); ++i) {
            steps(i) = scale * std::max(std::abs(x(i)), 1.0);
        }
        return steps;
    };

    OptimizeResult best = run_once(counted, x0, steps_for(x0, cfg.simplex_scale), cfg.max_iters,
                                   cfg.tol);
    for (int r = 0; r < cfg.restarts; ++r) {
        // Restart from the incumbent with a fresh, randomly perturbed simplex.
        Vector steps = steps_for(best.x, cfg.simplex_scale);
        Vector start = best.x;
        for (Index i = 0; i < start.size(); ++i) {
            start(i) += 0.1 * steps(i) * jitter(rng);
            steps(i) *= (jitter(rng) < 0.0 ? -1.0 : 1.0);
        }
        OptimizeResult trial = run_once(counted, start, steps, cfg.max_iters, cfg.tol);
        if (trial.value < best.value) {
            best = std::move(trial);
        }
    }
    best.evaluations = counted.count();
    return best;
}

}  // namespace limflow
