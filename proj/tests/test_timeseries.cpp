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

#include "limflow/csv.hpp"
#include "limflow/error.hpp"
#include "limflow/simulator.hpp"
#include "limflow/timeseries.hpp"
#include "support.hpp"

#include <Eigen/Eigenvalues>

#include <numbers>
#include <random>
#include <sstream>

using namespace limflow;
using namespace testsupport;

namespace {

TimeSeriesMatrix series(const Matrix& data, double dt = 1.0, int phase = 0) {
    TimeSeriesMatrix x;
    x.data = data;
    x.dt = dt;
    x.t0_phase = phase;
    return x;
}

TimeSeriesMatrix iid(Index n, Index len, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    Matrix m(n, len);
    for (Index t = 0; t < len; ++t) {
        for (Index i = 0; i < n; ++i) {
            m(i, t) = g(rng);
        }
    }
    return series(m);
}

ErrorCode code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode{};
}

SimSpec white_spec(std::uint64_t seed) {
    SimSpec s;
    s.A = a_dagger();
    s.Q = Matrix::Identity(2, 2);
    s.dt = 0.1;
    s.steps = 200000;
    s.seed = seed;
    return s;
}

}  // namespace

TEST_CASE("remove_climatology removes constants and periodic signals") {
    Matrix c = Matrix::Constant(2, 60, 3.5);
    CHECK(max_abs(remove_climatology(series(c), 12).data) <= 1e-14);

    Matrix p(1, 120);
    for (Index t = 0; t < 120; ++t) {
        p(0, t) = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 12.0) + 0.3 * (t % 12);
    }
    CHECK(max_abs(remove_climatology(series(p), 12).data) <= 1e-12);
}

TEST_CASE("remove_climatology recovers an OU path under a seasonal cycle") {
    auto spec = white_spec(3);
    spec.steps = 12000;
    spec.dt = 1.0;
    const auto ou = simulate(spec);
    Matrix seasonal(2, ou.length());
    for (Index t = 0; t < ou.length(); ++t) {
        const double ph = 2.0 * std::numbers::pi * static_cast<double>(t) / 12.0;
        seasonal(0, t) = 4.0 * std::cos(ph);
        seasonal(1, t) = -2.0 * std::sin(ph) + 1.0;
    }
    const auto cleaned = remove_climatology(series(ou.data + seasonal), 12);
    // Residual is the per-phase sample mean of the OU path: O(stdev / sqrt(T / 12)).
    const double bound = 5.0 * std::sqrt(1.2 / (12000.0 / 12.0));
    CHECK(max_abs(cleaned.data - ou.data) <= bound);
}

TEST_CASE("remove_climatology honours the starting phase") {
    Matrix p(1, 24);
    for (Index t = 0; t < 24; ++t) {
        p(0, t) = static_cast<double>((t + 5) % 12);
    }
    CHECK(max_abs(remove_climatology(series(p, 1.0, 5), 12).data) <= 1e-14);
}

TEST_CASE("remove_climatology is idempotent") {
    const auto x = iid(3, 240, 5);
    const auto once = remove_climatology(x, 12);
    const auto twice = remove_climatology(once, 12);
    CHECK(max_abs(twice.data - once.data) <= 1e-12);
}

TEST_CASE("remove_climatology errors") {
    const auto x = iid(1, 10, 1);
    CHECK(code_of([&] { remove_climatology(x, 11); }) == ErrorCode::insufficient_data);
    CHECK(code_of([&] { remove_climatology(x, 0); }) == ErrorCode::invalid_argument);
}

TEST_CASE("running_mean arithmetic") {
    Matrix m(1, 4);
    m << 1.0, 2.0, 3.0, 4.0;
    const auto r = running_mean(series(m), 3);
    REQUIRE(r.length() == 2);
    CHECK(r.data(0, 0) == doctest::Approx(2.0));
    CHECK(r.data(0, 1) == doctest::Approx(3.0));
    CHECK(r.t0_phase == 1);

    const auto x = iid(2, 50, 2);
    CHECK(running_mean(x, 1).data == x.data);
    CHECK_THROWS_AS(running_mean(x, 2), Error);
}

TEST_CASE("running_mean of white noise has a third of the variance") {
    const auto x = iid(1, 100000, 9);
    const auto r = running_mean(x, 3);
    const double mean = r.data.mean();
    const double var = (r.data.array() - mean).square().mean();
    CHECK(std::abs(var - 1.0 / 3.0) <= 0.1 / 3.0);
}

TEST_CASE("running_mean commutes with diagonal scaling") {
    const auto x = iid(2, 100, 4);
    const Matrix d = diag2(2.0, 0.1);
    auto scaled = x;
    scaled.data = d * x.data;
    CHECK(max_abs(running_mean(scaled, 3).data - d * running_mean(x, 3).data) <= 1e-14);
}

TEST_CASE("normalize_variance") {
    auto x = iid(2, 1000, 8);
    x.data.row(1) *= 7.0;
    const auto k = lagged_correlation(normalize_variance(x), 0);
    CHECK(k.cov(0, 0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(k.cov(1, 1) == doctest::Approx(1.0).epsilon(1e-12));

    const Matrix flat = Matrix::Constant(1, 10, 2.0);
    CHECK(code_of([&] { normalize_variance(series(flat)); }) == ErrorCode::degenerate_variance);
}

TEST_CASE("lagged_correlation of iid noise") {
    const Index len = 100000;
    const auto k = lagged_correlation(iid(3, len, 21), 5);
    const double tol = 5.0 / std::sqrt(static_cast<double>(len));
    CHECK(max_abs(k.at(0) - Matrix::Identity(3, 3)) <= tol);
    for (Index s = 1; s <= 5; ++s) {
        CHECK(max_abs(k.at(s)) <= tol);
    }
}

TEST_CASE("lagged_correlation covariance is symmetric positive semidefinite") {
    const auto x = simulate(white_spec(2));
    const auto k = lagged_correlation(x, 3);
    CHECK(max_abs(k.cov - k.cov.transpose()) <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Matrix> es(k.cov);
    CHECK(es.eigenvalues().minCoeff() >= -1e-10);
    CHECK(k.dt == 0.1);
    CHECK(k.max_lag() == 3);
}

TEST_CASE("lagged_correlation of a white OU matches the exponential law") {
    const auto x = simulate(white_spec(31));
    const auto k = lagged_correlation(x, 40);
    const Matrix c = c_dagger();
    for (Index s = 0; s <= 40; s += 5) {
        const Matrix exact = expm(a_dagger(), 0.1 * static_cast<double>(s)) * c;
        CHECK(max_abs(k.at(s) - exact) <= 0.05);
    }
}

TEST_CASE("lagged_correlation transforms under diagonal scaling") {
    const auto x = iid(2, 5000, 12);
    const Matrix d = diag2(3.0, 0.2);
    auto scaled = x;
    scaled.data = d * x.data;
    const auto k = lagged_correlation(x, 4);
    const auto ks = lagged_correlation(scaled, 4);
    for (Index s = 0; s <= 4; ++s) {
        CHECK(max_abs(ks.at(s) - d * k.at(s) * d) <= 1e-12);
    }
}

TEST_CASE("lagged_correlation errors") {
    const auto x = iid(2, 10, 1);
    CHECK(code_of([&] { lagged_correlation(x, 10); }) == ErrorCode::insufficient_data);
    CHECK(code_of([&] { lagged_correlation(x, -1); }) == ErrorCode::invalid_argument);
}

TEST_CASE("forward_diff_covariances trivial cases") {
    const Matrix flat = Matrix::Constant(2, 20, 1.5);
    CHECK(max_abs(forward_diff_covariances(series(flat)).cross) <= 1e-14);

    Matrix ramp(2, 50);
    for (Index t = 0; t < 50; ++t) {
        ramp(0, t) = static_cast<double>(t);
        ramp(1, t) = 2.0 * static_cast<double>(t);
    }
    CHECK(max_abs(forward_diff_covariances(series(ramp)).cross) <= 1e-10);
}

TEST_CASE("forward_diff_covariances of a white OU") {
    const auto x = simulate(white_spec(41));
    const auto d = forward_diff_covariances(x);
    const Matrix c = c_dagger();
    const Matrix oracle = (expm(a_dagger(), 0.1) * c - c) / 0.1;
    CHECK(max_abs(d.cross.transpose() - oracle) <= 0.05);
    CHECK(max_abs(d.cov - c) <= 0.05);
}

TEST_CASE("window_steps") {
    CHECK(window_steps(4.0, 1.0) == 4);
    CHECK(window_steps(4.0, 0.1) == 40);
    CHECK(window_steps(0.3, 0.1) == 3);
    CHECK_THROWS_AS(window_steps(0.25, 0.1), Error);
    CHECK_THROWS_AS(window_steps(1.0, 0.0), Error);
}

TEST_CASE("csv round trip") {
    Matrix m(2, 3);
    m << 1.0, 0.1, -2.5, 1e-17, 3.0, 1.0 / 3.0;
    auto x = series(m, 0.5);
    std::stringstream buf;
    write_series_csv(buf, {"a", "b"}, x);
    const auto csv = read_series_csv(buf);
    CHECK(csv.names == std::vector<std::string>{"a", "b"});
    CHECK(csv.data == m);
    const auto back = to_time_series(csv, 0.0);
    CHECK(back.dt == doctest::Approx(0.5));
}

TEST_CASE("csv parse errors carry location") {
    auto message = [](const std::string& text) {
        std::istringstream in(text);
        try {
            read_series_csv(in, "f.csv");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::parse_error);
            return std::string(e.what());
        }
        return std::string("no error");
    };
    CHECK(message("").find("empty file") != std::string::npos);
    CHECK(message("time,a\n").find("no data rows") != std::string::npos);
    CHECK(message("t,a\n0,1\n").find("f.csv:1") != std::string::npos);
    CHECK(message("time,a\n0,1\n1,2,3\n").find("f.csv:3") != std::string::npos);
    const auto bad = message("time,a,b\n0,1,2\n1,x,3\n");
    CHECK(bad.find("f.csv:3") != std::string::npos);
    CHECK(bad.find("'a'") != std::string::npos);
}
