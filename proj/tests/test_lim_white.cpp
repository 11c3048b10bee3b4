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

#include "limflow/error.hpp"
#include "limflow/infoflow.hpp"
#include "limflow/lim_white.hpp"
#include "limflow/simulator.hpp"
#include "limflow/timeseries.hpp"
#include "support.hpp"

#include <vector>

using namespace limflow;
using namespace testsupport;

namespace {

// Classical RK4 on K' = A K from K(0) = C.
Matrix integrate_moment_ode(const Matrix& a, const Matrix& c, double s, int steps) {
    const double h = s / steps;
    Matrix k = c;
    for (int i = 0; i < steps; ++i) {
        const Matrix k1 = a * k;
        const Matrix k2 = a * (k + 0.5 * h * k1);
        const Matrix k3 = a * (k + 0.5 * h * k2);
        const Matrix k4 = a * (k + h * k3);
        k += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    return k;
}

LaggedCorrelation exact_k(const Matrix& a, const Matrix& c, double dt, Index lags) {
    return white_correlation(a, c, dt, lags);
}

}  // namespace

TEST_CASE("single_lag_dynamics on exact inputs") {
    const auto kd = exact_k(diag2(-1.0, -0.5), Matrix::Identity(2, 2), 0.5, 4);
    check_close(single_lag_dynamics(kd, 1.0), diag2(-1.0, -0.5), 1e-12);

    const auto k = exact_k(a_dagger(), c_dagger(), 0.5, 4);
    for (double rho : {0.5, 1.0}) {
        CHECK(max_abs(single_lag_dynamics(k, rho) - a_dagger()) <= 1e-8);
    }
    CHECK_THROWS_AS(single_lag_dynamics(k, 0.75), Error);
    CHECK_THROWS_AS(single_lag_dynamics(k, 5.0), Error);
}

TEST_CASE("single_lag_dynamics reports a branch failure") {
    LaggedCorrelation k;
    k.dt = 1.0;
    k.cov = Matrix::Identity(2, 2);
    k.mats = {k.cov, diag2(-0.3, 0.5)};
    try {
        single_lag_dynamics(k, 1.0);
        FAIL("negative eigenvalue accepted");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::branch_failure);
    }
}

TEST_CASE("white_correlation") {
    const std::vector<double> lags{0.0, 1.0};
    const auto kd = white_correlation(diag2(-1.0, -0.5), Matrix::Identity(2, 2), lags);
    check_close(kd[0], Matrix::Identity(2, 2), 0.0);
    check_close(kd[1], diag2(std::exp(-1.0), std::exp(-0.5)), 1e-15);

    const std::vector<double> two{2.0};
    const Matrix ode = integrate_moment_ode(a_dagger(), Matrix::Identity(2, 2), 2.0, 4000);
    check_close(white_correlation(a_dagger(), Matrix::Identity(2, 2), two)[0], ode, 1e-12);

    Matrix unstable = a_dagger();
    unstable(0, 0) = 1.0;
    CHECK_THROWS_AS(white_correlation(unstable, Matrix::Identity(2, 2), lags), Error);
}

TEST_CASE("white_diffusion") {
    check_close(white_diffusion(diag2(-1.0, -0.5), Matrix::Identity(2, 2)), diag2(1.0, 0.5), 0.0);

    const Matrix c = c_dagger();
    check_close(white_diffusion(-Matrix::Identity(2, 2), c), c, 1e-15);

    Matrix q(2, 2);
    q << 1.0, -0.15, -0.15, 0.8;
    check_close(white_diffusion(a_dagger(), Matrix::Identity(2, 2)), q, 1e-15);
    check_close(white_diffusion(a_dagger(), c_dagger()), Matrix::Identity(2, 2), 1e-14);
}

TEST_CASE("fit_white recovers dynamics from exact correlations") {
    const auto k = exact_k(a_dagger(), c_dagger(), 0.1, 60);
    const FitConfig cfg;
    const auto m = fit_white(k, cfg);
    CHECK((m.A - a_dagger()).norm() <= 1e-6);
    CHECK(m.q_positive_definite);
    CHECK(spectral_abscissa(m.A) < 0.0);
    CHECK(max_abs(m.C - c_dagger()) == 0.0);

    const Matrix fd = m.A * m.C + m.C * m.A.transpose() + 2.0 * m.Q;
    CHECK(fd.norm() <= 1e-10 * m.Q.norm());

    // Agrees with the single-lag estimator at every usable lag.
    for (Index s = 1; s <= 40; ++s) {
        CHECK(max_abs(single_lag_dynamics(k, 0.1 * static_cast<double>(s)) - m.A) <= 1e-6);
    }
}

TEST_CASE("fit_white on a decoupled system returns diagonal dynamics") {
    const auto k = exact_k(diag2(-0.7, -0.3), diag2(2.0, 0.5), 1.0, 6);
    const auto m = fit_white(k, FitConfig{});
    CHECK(std::abs(m.A(0, 1)) <= 1e-6);
    CHECK(std::abs(m.A(1, 0)) <= 1e-6);
    CHECK(m.A(0, 0) == doctest::Approx(-0.7).epsilon(1e-6));
    CHECK(m.A(1, 1) == doctest::Approx(-0.3).epsilon(1e-6));
}

TEST_CASE("fit_white on simulated data with a short window") {
    SimSpec spec;
    spec.A = a_dagger();
    spec.Q = Matrix::Identity(2, 2);
    spec.dt = 0.1;
    spec.steps = 200000;
    spec.seed = 5;
    const auto k = lagged_correlation(simulate(spec), 20);
    FitConfig cfg;
    cfg.window = 2.0;
    const auto m = fit_white(k, cfg);
    CHECK(max_abs(m.A - a_dagger()) <= 0.1 * a_dagger().norm());

    // The optimum is no worse than any starting guess.
    for (const auto& a0 : detail::initial_guesses(k, cfg)) {
        if (spectral_abscissa(a0) < 0.0) {
            CHECK(m.fit_residual <= white_objective(k, cfg, a0) + 1e-15);
        }
    }
    CHECK(m.fit_residual == doctest::Approx(white_objective(k, cfg, m.A)));
}

TEST_CASE("fit_white is equivariant under diagonal scaling") {
    SimSpec spec;
    spec.A = a_dagger();
    spec.Q = Matrix::Identity(2, 2);
    spec.dt = 0.1;
    spec.steps = 50000;
    spec.seed = 8;
    const auto k = lagged_correlation(simulate(spec), 40);
    const Matrix d = diag2(4.0, 0.5);
    LaggedCorrelation ks = k;
    for (auto& m : ks.mats) {
        m = d * m * d;
    }
    ks.cov = d * k.cov * d;

    const FitConfig cfg;
    const auto m = fit_white(k, cfg);
    const auto ms = fit_white(ks, cfg);
    CHECK(max_abs(ms.A - d * m.A * d.inverse()) <= 1e-6);
    const Matrix t = info_flow_from_model(m.A, m.C).T;
    const Matrix ts = info_flow_from_model(ms.A, ms.C).T;
    CHECK(max_abs(t - ts) <= 1e-6);
}

TEST_CASE("fit_white validates its inputs") {
    const auto k = exact_k(a_dagger(), c_dagger(), 1.0, 3);
    FitConfig cfg;
    CHECK_THROWS_AS(fit_white(k, cfg), Error);  // window 4 exceeds 3 lags
    cfg.window = 3.0;
    cfg.weights = {1.0, 0.0};
    CHECK_THROWS_AS(fit_white(k, cfg), Error);
    cfg.weights = {0.0, 0.0, 0.0};
    CHECK_THROWS_AS(fit_white(k, cfg), Error);
    cfg.weights = {1.0, 2.0, 0.5};
    CHECK((fit_white(k, cfg).A - a_dagger()).norm() <= 1e-6);
}

TEST_CASE("window weights default to uniform") {
    const auto k = exact_k(a_dagger(), c_dagger(), 0.5, 10);
    const auto w = detail::window_weights(k, FitConfig{});
    REQUIRE(w.size() == 8);
    for (double x : w) {
        CHECK(x == 1.0);
    }
}

TEST_CASE("flatten and unflatten are inverse") {
    const Matrix a = a_dagger();
    CHECK(detail::unflatten(detail::flatten(a), 2) == a);
}
