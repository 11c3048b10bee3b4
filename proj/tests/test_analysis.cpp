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

#include "limflow/analysis.hpp"
#include "limflow/csv.hpp"
#include "limflow/error.hpp"
#include "limflow/lim_colored.hpp"
#include "limflow/simulator.hpp"
#include "support.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace limflow;
using namespace testsupport;
namespace fs = std::filesystem;

namespace {

std::vector<double> row(const Matrix& m, Index i) {
    std::vector<double> out(static_cast<std::size_t>(m.cols()));
    for (Index t = 0; t < m.cols(); ++t) {
        out[static_cast<std::size_t>(t)] = m(i, t);
    }
    return out;
}

// Index variable 0 drives cells 1 and 2; cells 3 and 4 evolve on their own.
// Monthly sampling.
TimeSeriesMatrix five_variable_system(Index steps, std::uint64_t seed) {
    SimSpec s;
    s.A = Matrix::Zero(5, 5);
    s.A.diagonal() << -0.5, -0.6, -0.4, -0.5, -0.7;
    s.A(1, 0) = 0.4;
    s.A(2, 0) = -0.3;
    s.Q = Matrix::Identity(5, 5);
    s.dt = 1.0;
    s.steps = steps;
    s.seed = seed;
    return simulate(s);
}

PipelineConfig raw_monthly() {
    PipelineConfig cfg;
    cfg.climatology_period = 0;
    cfg.running_mean = 1;
    return cfg;
}

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() /
               ("limflow_test_" + std::to_string(std::random_device{}()));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const std::string& text) const {
        const auto p = path / name;
        std::ofstream(p) << text;
        return p.string();
    }
};

}  // namespace

TEST_CASE("display masking") {
    CHECK(display_value(0.05, 0.02) == 0.02);
    CHECK(display_value(-0.05, 0.02) == -0.02);
    CHECK(display_value(0.013, 0.02) == 0.013);
    CHECK(display_value(0.02, 0.02) == 0.02);
    CHECK(display_value(0.7, 0.0) == 0.7);
    CHECK(std::isnan(display_value(std::nan(""), 0.02)));
}

TEST_CASE("default configuration") {
    const PipelineConfig cfg;
    CHECK(cfg.climatology_period == 12);
    CHECK(cfg.running_mean == 3);
    CHECK(cfg.fit.window == 4.0);
    CHECK(cfg.mask == 0.02);
    CHECK_FALSE(cfg.normalize);
    CHECK(pipeline_lags(cfg) == 6);
}

TEST_CASE("identical series fail with a singularity reason") {
    const auto x = five_variable_system(2000, 1);
    const auto s = row(x.data, 0);
    const auto rec = run_pair_analysis(s, s, PipelineConfig{});
    CHECK_FALSE(rec.ok);
    CHECK(rec.reason.find("singular") != std::string::npos);
}

TEST_CASE("short series fail with an insufficient-length reason") {
    const auto x = five_variable_system(39, 1);
    const auto rec = run_pair_analysis(row(x.data, 0), row(x.data, 1), PipelineConfig{});
    CHECK_FALSE(rec.ok);
    CHECK(rec.reason.find("insufficient length") != std::string::npos);
    CHECK_THROWS_AS(run_pair_analysis(row(x.data, 0), std::vector<double>(5), PipelineConfig{}),
                    Error);
}

TEST_CASE("decoupled pair shows no cross flow") {
    const auto x = five_variable_system(200000, 2);
    const auto rec = run_pair_analysis(row(x.data, 0), row(x.data, 3), PipelineConfig{});
    REQUIRE(rec.ok);
    for (const auto* f : {&rec.white, &rec.colored, &rec.liang}) {
        CHECK(std::abs(f->idx_to_cell) <= 0.005);
        CHECK(std::abs(f->cell_to_idx) <= 0.005);
    }
}

TEST_CASE("colored pair flows match the generating model") {
    // Slow monthly dynamics driven by noise with a two-month memory.
    Matrix a(2, 2);
    a << -0.5, 0.0, 0.3, -0.4;
    SimSpec s;
    s.A = a;
    s.tau = 2.0;
    s.Q = Matrix::Identity(2, 2);
    s.dt = 1.0;
    s.steps = 200000;
    s.seed = 3;
    const auto x = simulate(s);
    const Matrix c = stationary_covariance(s);
    const double truth = a(1, 0) * c(1, 0) / c(1, 1);

    auto cfg = raw_monthly();
    const auto rec = run_pair_analysis(row(x.data, 0), row(x.data, 1), cfg);
    REQUIRE(rec.ok);
    CHECK(std::abs(rec.colored.idx_to_cell - truth) <= 0.15 * std::abs(truth));
    CHECK(std::abs(rec.colored.cell_to_idx) <= 0.005);
    CHECK(rec.tau == doctest::Approx(2.0).epsilon(0.2));
    CHECK_FALSE(rec.white_limit);
}

TEST_CASE("grid scan separates coupled and decoupled cells") {
    const auto x = five_variable_system(200000, 4);
    const auto index = row(x.data, 0);
    const Matrix grid = x.data.bottomRows(4);
    const std::vector<GridCell> cells{{"c1", 10.0, -5.0}, {"c2", 20.0, -5.0},
                                      {"c3", 10.0, 5.0}, {"c4", 20.0, 5.0}};
    PipelineConfig cfg;
    cfg.workers = 2;
    const auto result = grid_scan(index, cells, grid, cfg);
    CHECK(result.cells == 4);
    CHECK(result.failed_cells == 0);
    REQUIRE(result.records.size() == 12);
    for (const auto& r : result.records) {
        CHECK(r.status == "ok");
        const bool coupled = r.cell.id == "c1" || r.cell.id == "c2";
        if (coupled) {
            CHECK(std::abs(r.T_idx_to_cell) > 0.01);
        } else {
            CHECK(std::abs(r.T_idx_to_cell) < 0.005);
            CHECK(std::abs(r.T_cell_to_idx) < 0.005);
        }
        CHECK(r.display_idx_to_cell == display_value(r.T_idx_to_cell, 0.02));
        CHECK(r.display_cell_to_idx == display_value(r.T_cell_to_idx, 0.02));
        CHECK(std::isnan(r.tau) == (r.method != "colored"));
    }
    CHECK(result.records[0].method == "white");
    CHECK(result.records[1].method == "colored");
    CHECK(result.records[2].method == "liang");
    CHECK(result.records[3].cell.id == "c2");
}

TEST_CASE("grid scan output does not depend on the worker count") {
    const auto x = five_variable_system(6000, 5);
    const auto index = row(x.data, 0);
    const Matrix grid = x.data.bottomRows(4);
    const std::vector<GridCell> cells{{"a"}, {"b"}, {"c"}, {"d"}};
    PipelineConfig cfg;
    cfg.workers = 1;
    const auto one = grid_scan(index, cells, grid, cfg);
    cfg.workers = 3;
    const auto three = grid_scan(index, cells, grid, cfg);
    std::ostringstream a, b;
    write_results_csv(a, one);
    write_results_csv(b, three);
    CHECK(a.str() == b.str());
}

TEST_CASE("mask zero keeps display equal to raw") {
    const auto x = five_variable_system(3000, 6);
    PipelineConfig cfg;
    cfg.mask = 0.0;
    const auto result = grid_scan(row(x.data, 0), {{"a"}, {"b"}}, x.data.middleRows(1, 2), cfg);
    for (const auto& r : result.records) {
        CHECK(r.display_idx_to_cell == r.T_idx_to_cell);
        CHECK(r.display_cell_to_idx == r.T_cell_to_idx);
    }
}

TEST_CASE("grid scan validates its inputs") {
    const auto x = five_variable_system(100, 1);
    const auto index = row(x.data, 0);
    CHECK_THROWS_AS(grid_scan(index, {}, Matrix(0, 100), PipelineConfig{}), Error);
    CHECK_THROWS_AS(grid_scan(index, {{"a"}}, x.data.middleRows(1, 2), PipelineConfig{}), Error);
    PipelineConfig neg;
    neg.mask = -1.0;
    CHECK_THROWS_AS(grid_scan(index, {{"a"}}, x.data.middleRows(1, 1), neg), Error);
}

TEST_CASE("failed cells are reported and the scan continues") {
    const auto x = five_variable_system(2000, 7);
    Matrix grid(2, 2000);
    grid.row(0) = x.data.row(0);  // identical to the index
    grid.row(1) = x.data.row(1);
    const auto result = grid_scan(row(x.data, 0), {{"same"}, {"other"}}, grid, PipelineConfig{});
    CHECK(result.failed_cells == 1);
    CHECK(result.records[0].status.rfind("failed: ", 0) == 0);
    CHECK(std::isnan(result.records[0].T_idx_to_cell));
    CHECK(result.records[3].status == "ok");
}

TEST_CASE("grid scan from files") {
    TempDir dir;
    const auto x = five_variable_system(600, 8);
    std::ostringstream idx, grid;
    write_series_csv(idx, {"dmi"}, TimeSeriesMatrix{x.data.topRows(1), 1.0, 0});
    write_series_csv(grid, {"cell_0", "cell_1"}, TimeSeriesMatrix{x.data.middleRows(1, 2), 1.0, 0});
    const auto idx_path = dir.file("idx.csv", idx.str());
    const auto grid_path = dir.file("grid.csv", grid.str());
    const auto coords = dir.file("coords.csv", "cell_id,lon,lat\ncell_0,50.5,-10\ncell_1,51.5,-10\n");

    const auto result = grid_scan_files(idx_path, grid_path, coords, PipelineConfig{});
    CHECK(result.cells == 2);
    CHECK(result.records[0].cell.lon == 50.5);
    CHECK(result.records[3].cell.lat == -10.0);

    std::ostringstream out;
    write_results_csv(out, result);
    std::istringstream lines(out.str());
    std::string header;
    std::getline(lines, header);
    CHECK(header ==
          "cell_id,lon,lat,method,T_idx_to_cell,T_cell_to_idx,tau,residual,"
          "display_T_idx_to_cell,display_T_cell_to_idx,status");
    std::string first;
    std::getline(lines, first);
    CHECK(first.rfind("cell_0,50.5,-10,white,", 0) == 0);
    // White records carry no tau: empty field.
    CHECK(split_csv_row(first)[6].empty());

    const auto doc = nlohmann::json::parse(results_json(result));
    CHECK(doc["units"] == "nats/month");
    CHECK(doc["config"]["fit"]["window"] == 4.0);
    CHECK(doc["config"]["mask"] == 0.02);
    CHECK(doc["records"].size() == 6);

    for (const char* method : {"white", "colored", "liang"}) {
        const auto svg = render_svg(result, method, true);
        CHECK(svg.rfind("<svg", 0) == 0);
        CHECK(svg.find("</svg>") != std::string::npos);
    }
    CHECK(render_tau_svg(result).find("<svg") != std::string::npos);
}

TEST_CASE("grid file errors") {
    TempDir dir;
    const auto idx = dir.file("idx.csv", "time,dmi\n0,1\n1,2\n");
    const auto empty = dir.file("empty.csv", "");
    auto code = [](const std::function<void()>& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode{};
    };
    CHECK(code([&] { grid_scan_files(idx, empty, "", PipelineConfig{}); }) ==
          ErrorCode::parse_error);
    const auto short_grid = dir.file("short.csv", "time,c0\n0,1\n");
    CHECK(code([&] { grid_scan_files(idx, short_grid, "", PipelineConfig{}); }) ==
          ErrorCode::parse_error);
    const auto two = dir.file("two.csv", "time,a,b\n0,1,2\n1,2,3\n");
    CHECK(code([&] { grid_scan_files(two, two, "", PipelineConfig{}); }) ==
          ErrorCode::parse_error);
    const auto bad_coords = dir.file("coords.csv", "c0,1\n");
    const auto grid = dir.file("grid.csv", "time,c0\n0,1\n1,2\n");
    CHECK(code([&] { grid_scan_files(idx, grid, bad_coords, PipelineConfig{}); }) ==
          ErrorCode::parse_error);
    CHECK(code([&] { grid_scan_files(idx, grid, (dir.path / "none").string(), PipelineConfig{}); }) ==
          ErrorCode::io_error);
}

TEST_CASE("correlation panels") {
    SimSpec s;
    s.A = a_dagger();
    s.tau = 2.0;
    s.Q = colored_diffusion(s.A, 2.0, c_dagger());
    s.dt = 0.1;
    s.steps = 200000;
    s.seed = 9;
    const auto colored = simulate(s);
    PipelineConfig cfg;
    cfg.dt = 0.1;
    cfg.climatology_period = 0;
    cfg.running_mean = 1;
    const auto p = export_correlation_panels(colored, cfg);
    const auto k = lagged_correlation(colored, pipeline_lags(cfg));
    REQUIRE(p.rows.size() == static_cast<std::size_t>(4 * (k.max_lag() + 1)));
    for (const auto& r : p.rows) {
        if (r.s == 0.0) {
            const double c = k.cov(r.i, r.j);
            CHECK(r.observed == doctest::Approx(c).epsilon(1e-14));
            CHECK(r.white == doctest::Approx(c).epsilon(1e-12));
            CHECK(r.colored == doctest::Approx(c).epsilon(1e-12));
            CHECK(r.liang == doctest::Approx(c).epsilon(1e-14));
        }
    }
    CHECK(window_rms(p, PanelColumn::colored, 4.0) < window_rms(p, PanelColumn::white, 4.0));

    std::ostringstream out;
    write_panels_csv(out, p);
    CHECK(out.str().rfind("s,i,j,observed,white,colored,liang\n0,1,1,", 0) == 0);

    SimSpec w;
    w.A = a_dagger();
    w.Q = Matrix::Identity(2, 2);
    w.dt = 0.1;
    w.steps = 200000;
    w.seed = 10;
    const auto white = simulate(w);
    const auto pw = export_correlation_panels(white, cfg);
    for (const auto& r : pw.rows) {
        if (r.s <= 0.2 + 1e-12) {
            CHECK(std::abs(r.liang - r.white) <= 0.05 * max_abs(c_dagger()));
        }
    }
    CHECK_THROWS_AS(window_rms(pw, PanelColumn::white, -1.0), Error);
}

TEST_CASE("preprocess applies the configured steps") {
    const auto x = five_variable_system(240, 11);
    const PipelineConfig cfg;
    const auto y = preprocess(x, cfg);
    CHECK(y.length() == 238);
    CHECK(y.t0_phase == 1);
    for (Index i = 0; i < y.variables(); ++i) {
        double sd = std::sqrt((y.data.row(i).array() - y.data.row(i).mean()).square().mean());
        CHECK(std::abs(y.data.row(i).mean()) <= 1e-10 * sd);
    }
    PipelineConfig norm = cfg;
    norm.normalize = true;
    const auto z = preprocess(x, norm);
    const auto kz = lagged_correlation(z, 0);
    CHECK(kz.cov(0, 0) == doctest::Approx(1.0));
}
