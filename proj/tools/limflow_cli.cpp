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

// limflow command-line driver. Links only the C interface.

#include "limflow/limflow.h"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using json = nlohmann::json;

namespace {

enum ExitCode { exit_ok = 0, exit_config = 1, exit_fit = 2 };

// Thrown for anything the user can fix in the config or inputs.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check(lf_status status, const std::string& what) {
    if (status == LF_OK) {
        return;
    }
    std::string msg = what + ": " + lf_status_string(status);
    if (const char* detail = lf_last_error(); detail != nullptr && *detail != '\0') {
        msg += ": ";
        msg += detail;
    }
    if (status == LF_ERR_FIT_FAILURE) {
        throw FitError(msg);
    }
    throw ConfigError(msg);
}

template <class T, void (*Free)(T*)>
struct Deleter {
    void operator()(T* p) const { Free(p); }
};
using Series = std::unique_ptr<lf_series, Deleter<lf_series, lf_series_free>>;
using Correlation = std::unique_ptr<lf_correlation, Deleter<lf_correlation, lf_correlation_free>>;
using WhiteModel = std::unique_ptr<lf_white_model, Deleter<lf_white_model, lf_white_model_free>>;
using ColoredModel =
    std::unique_ptr<lf_colored_model, Deleter<lf_colored_model, lf_colored_model_free>>;
using ScanResult = std::unique_ptr<lf_scan_result, Deleter<lf_scan_result, lf_scan_result_free>>;

// Row-major square matrix.
struct Mat {
    std::size_t n = 0;
    std::vector<double> v;
};

Mat parse_matrix_text(const std::string& text) {
    // "a,b;c,d"
    Mat m;
    std::vector<std::vector<double>> rows;
    std::stringstream rs(text);
    std::string row;
    while (std::getline(rs, row, ';')) {
        std::vector<double> r;
        std::stringstream cs(row);
        std::string cell;
        while (std::getline(cs, cell, ',')) {
            try {
                std::size_t used = 0;
                r.push_back(std::stod(cell, &used));
            } catch (const std::exception&) {
                throw ConfigError("bad matrix entry '" + cell + "' in '" + text + "'");
            }
        }
        rows.push_back(std::move(r));
    }
    m.n = rows.size();
    for (const auto& r : rows) {
        if (r.size() != m.n) {
            throw ConfigError("matrix '" + text + "' is not square");
        }
        m.v.insert(m.v.end(), r.begin(), r.end());
    }
    if (m.n == 0) {
        throw ConfigError("empty matrix");
    }
    return m;
}

Mat parse_matrix_json(const json& j, const std::string& key) {
    if (j.is_string()) {
        return parse_matrix_text(j.get<std::string>());
    }
    if (!j.is_array()) {
        throw ConfigError("'" + key + "' must be a nested array or \"a,b;c,d\" string");
    }
    Mat m;
    m.n = j.size();
    for (const auto& row : j) {
        if (!row.is_array() || row.size() != m.n) {
            throw ConfigError("'" + key + "' is not a square matrix");
        }
        for (const auto& x : row) {
            if (!x.is_number()) {
                throw ConfigError("'" + key + "' has a non-numeric entry");
            }
            m.v.push_back(x.get<double>());
        }
    }
    if (m.n == 0) {
        throw ConfigError("'" + key + "' is empty");
    }
    return m;
}

json matrix_json(std::size_t n, const std::vector<double>& v) {
    json out = json::array();
    for (std::size_t i = 0; i < n; ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < n; ++j) {
            row.push_back(v[i * n + j]);
        }
        out.push_back(row);
    }
    return out;
}

// Settings shared by all subcommands. Each has a JSON key equal to its long
// flag name with dashes turned into underscores.
struct Settings {
    std::string config;

    std::string input;
    std::string out;
    std::string json_out;
    std::string svg_prefix;
    std::string index;
    std::string grid;
    std::string coords;
    std::string method = "all";

    double dt = 1.0;
    int climatology_period = 12;
    int running_mean = 3;
    bool normalize = false;
    double max_lag = 6.0;
    double window = 4.0;
    double mask = 0.02;
    unsigned workers = 0;
    int restarts = 2;
    int max_iters = 4000;
    std::uint64_t fit_seed = 20240917;

    std::string a_text;
    std::string q_text;
    std::optional<Mat> A;
    std::optional<Mat> Q;
    double tau = 0.0;
    std::size_t steps = 10000;
    std::uint64_t seed = 1;
    std::size_t burn_in = 0;
    bool euler = false;
};

struct Binding {
    std::string key;
    CLI::Option* option;
    std::function<void(const json&)> assign;
};

template <class T>
Binding bind_setting(CLI::App& app, const std::string& flag, T& target, const std::string& help) {
    std::string key = flag;
    for (auto& c : key) {
        if (c == '-') {
            c = '_';
        }
    }
    CLI::Option* opt = nullptr;
    if constexpr (std::is_same_v<T, bool>) {
        opt = app.add_flag("--" + flag, target, help);
    } else {
        opt = app.add_option("--" + flag, target, help);
    }
    return {key, opt, [&target, key](const json& j) {
                try {
                    target = j.get<T>();
                } catch (const json::exception& e) {
                    throw ConfigError("config key '" + key + "': " + e.what());
                }
            }};
}

// Config-file values fill every setting whose flag was not given. One file can serve
// several subcommands, so keys that belong to another subcommand are skipped.
void apply_config(const std::string& path, const std::vector<Binding>& bindings,
                  const std::set<std::string>& all_keys, Settings& s) {
    if (path.empty()) {
        return;
    }
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open config '" + path + "'");
    }
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("config '" + path + "' must be a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const auto& b : bindings) {
            if (b.key != key) {
                continue;
            }
            known = true;
            if (b.option->count() == 0) {
                b.assign(value);
            }
        }
        if (key == "A" || key == "Q") {
            known = true;
            const bool overridden = key == "A" ? !s.a_text.empty() : !s.q_text.empty();
            if (!overridden) {
                (key == "A" ? s.A : s.Q) = parse_matrix_json(value, key);
            }
        }
        if (!known && all_keys.count(key) == 0) {
            throw ConfigError("unknown config key '" + key + "'");
        }
    }
}

lf_pipeline_config pipeline(const Settings& s) {
    lf_pipeline_config cfg;
    lf_pipeline_config_default(&cfg);
    cfg.dt = s.dt;
    cfg.climatology_period = s.climatology_period;
    cfg.running_mean = s.running_mean;
    cfg.normalize = s.normalize ? 1 : 0;
    cfg.max_lag = s.max_lag;
    cfg.fit.window = s.window;
    cfg.fit.optimizer.restarts = s.restarts;
    cfg.fit.optimizer.max_iters = s.max_iters;
    cfg.fit.optimizer.seed = s.fit_seed;
    cfg.mask = s.mask;
    cfg.workers = s.workers;
    return cfg;
}

void require_set(const std::string& value, const char* flag) {
    if (value.empty()) {
        throw ConfigError(std::string("missing required setting --") + flag);
    }
}

void emit(const std::string& path, const json& j) {
    if (path.empty() || path == "-") {
        std::cout << j.dump(2) << "\n";
        return;
    }
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write '" + path + "'");
    }
    out << j.dump(2) << "\n";
}

json config_echo(const lf_pipeline_config& cfg) {
    char* text = nullptr;
    check(lf_pipeline_config_json(&cfg, &text), "config echo");
    json j = json::parse(text);
    lf_string_free(text);
    return j;
}

Series load_preprocessed(const Settings& s, const lf_pipeline_config& cfg) {
    require_set(s.input, "input");
    lf_series* raw = nullptr;
    check(lf_series_read_csv(s.input.c_str(), s.dt, &raw), "reading " + s.input);
    Series raw_owner(raw);
    lf_series* prepared = nullptr;
    check(lf_series_preprocess(raw, &cfg, &prepared), "preprocessing");
    return Series(prepared);
}

Correlation correlations(const lf_series* x, const lf_pipeline_config& cfg) {
    const double span = std::max(cfg.fit.window, cfg.max_lag);
    const auto lags = static_cast<std::size_t>(std::llround(span / cfg.dt));
    lf_correlation* k = nullptr;
    check(lf_lagged_correlation(x, lags, &k), "lagged correlation");
    return Correlation(k);
}

json names_json(const lf_series* x) {
    json names = json::array();
    for (std::size_t i = 0; i < lf_series_vars(x); ++i) {
        names.push_back(lf_series_name(x, i));
    }
    return names;
}

struct WhiteOut {
    WhiteModel model;
    json report;
};

WhiteOut white_fit(const lf_correlation* k, const lf_pipeline_config& cfg) {
    lf_white_model* m = nullptr;
    check(lf_fit_white(k, &cfg.fit, &m), "white fit");
    WhiteOut out{WhiteModel(m), json::object()};
    const std::size_t n = lf_white_model_vars(m);
    std::vector<double> a(n * n), q(n * n), c(n * n);
    double residual = 0.0;
    int qpd = 0;
    check(lf_white_model_get(m, a.data(), q.data(), c.data(), &residual, &qpd), "white model");
    out.report = {{"A", matrix_json(n, a)},
                  {"Q", matrix_json(n, q)},
                  {"C", matrix_json(n, c)},
                  {"residual", residual},
                  {"Q_positive_definite", qpd != 0}};
    return out;
}

struct ColoredOut {
    ColoredModel model;
    json report;
};

ColoredOut colored_fit(const lf_correlation* k, const lf_pipeline_config& cfg,
                       const lf_white_model* warm) {
    lf_colored_model* m = nullptr;
    check(lf_fit_colored(k, &cfg.fit, warm, &m), "colored fit");
    ColoredOut out{ColoredModel(m), json::object()};
    const std::size_t n = lf_colored_model_vars(m);
    std::vector<double> a(n * n), qc(n * n), b(n * n), c(n * n);
    double tau = 0.0, residual = 0.0;
    int white_limit = 0, qpd = 0;
    check(lf_colored_model_get(m, a.data(), &tau, qc.data(), b.data(), c.data(), &residual,
                               &white_limit, &qpd),
          "colored model");
    out.report = {{"A", matrix_json(n, a)},
                  {"tau", tau},
                  {"Qc", matrix_json(n, qc)},
                  {"B", matrix_json(n, b)},
                  {"C", matrix_json(n, c)},
                  {"residual", residual},
                  {"white_limit", white_limit != 0},
                  {"Qc_positive_definite", qpd != 0}};
    return out;
}

json flows_from_model(const json& report) {
    const Mat a = parse_matrix_json(report.at("A"), "A");
    const Mat c = parse_matrix_json(report.at("C"), "C");
    std::vector<double> t(a.n * a.n);
    check(lf_info_flow_model(a.n, a.v.data(), c.v.data(), t.data()), "information flow");
    return matrix_json(a.n, t);
}

int run_simulate(const Settings& s) {
    if (!s.A || !s.Q) {
        throw ConfigError("simulate needs both A and Q (flags --A/--Q or config keys)");
    }
    if (s.A->n != s.Q->n) {
        throw ConfigError("A and Q differ in size");
    }
    lf_sim_spec spec{};
    spec.n = s.A->n;
    spec.A = s.A->v.data();
    spec.Q = s.Q->v.data();
    spec.tau = s.tau;
    spec.dt = s.dt;
    spec.steps = s.steps;
    spec.seed = s.seed;
    spec.burn_in = s.burn_in;
    spec.euler_maruyama = s.euler ? 1 : 0;
    lf_series* x = nullptr;
    check(lf_simulate(&spec, &x), "simulation");
    Series owner(x);
    const std::string out = s.out.empty() ? "/dev/stdout" : s.out;
    check(lf_series_write_csv(x, out.c_str()), "writing " + out);
    return exit_ok;
}

int run_fit_white(const Settings& s) {
    const auto cfg = pipeline(s);
    const auto x = load_preprocessed(s, cfg);
    const auto k = correlations(x.get(), cfg);
    auto fit = white_fit(k.get(), cfg);
    fit.report["variables"] = names_json(x.get());
    fit.report["config"] = config_echo(cfg);
    emit(s.out, fit.report);
    return exit_ok;
}

int run_fit_colored(const Settings& s) {
    const auto cfg = pipeline(s);
    const auto x = load_preprocessed(s, cfg);
    const auto k = correlations(x.get(), cfg);
    auto fit = colored_fit(k.get(), cfg, nullptr);
    fit.report["variables"] = names_json(x.get());
    fit.report["config"] = config_echo(cfg);
    emit(s.out, fit.report);
    return exit_ok;
}

int run_infoflow(const Settings& s) {
    const bool all = s.method == "all";
    if (!all && s.method != "model-white" && s.method != "model-colored" && s.method != "liang") {
        throw ConfigError("unknown method '" + s.method +
                          "' (expected model-white, model-colored, liang or all)");
    }
    const auto cfg = pipeline(s);
    const auto x = load_preprocessed(s, cfg);
    json report = {{"variables", names_json(x.get())},
                   {"convention", "T[i][j] is the flow from variable j into variable i"},
                   {"units", "nats per time unit"},
                   {"config", config_echo(cfg)}};
    if (all || s.method != "liang") {
        const auto k = correlations(x.get(), cfg);
        auto white = white_fit(k.get(), cfg);
        if (all || s.method == "model-white") {
            report["model-white"] = flows_from_model(white.report);
        }
        if (all || s.method == "model-colored") {
            auto colored = colored_fit(k.get(), cfg, white.model.get());
            report["model-colored"] = flows_from_model(colored.report);
            report["tau"] = colored.report["tau"];
        }
    }
    if (all || s.method == "liang") {
        const std::size_t n = lf_series_vars(x.get());
        std::vector<double> t(n * n);
        check(lf_info_flow_liang(x.get(), t.data()), "liang flow");
        report["liang"] = matrix_json(n, t);
    }
    emit(s.out, report);
    return exit_ok;
}

int run_grid_scan(const Settings& s) {
    require_set(s.index, "index");
    require_set(s.grid, "grid");
    const auto cfg = pipeline(s);
    lf_scan_result* r = nullptr;
    check(lf_grid_scan_files(s.index.c_str(), s.grid.c_str(),
                             s.coords.empty() ? nullptr : s.coords.c_str(), &cfg, &r),
          "grid scan");
    ScanResult owner(r);
    const std::string out = s.out.empty() ? "/dev/stdout" : s.out;
    check(lf_scan_result_write_csv(r, out.c_str()), "writing " + out);
    if (!s.json_out.empty()) {
        check(lf_scan_result_write_json(r, s.json_out.c_str()), "writing " + s.json_out);
    }
    if (!s.svg_prefix.empty()) {
        check(lf_scan_result_write_svg(r, s.svg_prefix.c_str()), "writing heatmaps");
    }
    const std::size_t cells = lf_scan_result_cells(r);
    const std::size_t failed = lf_scan_result_failed_cells(r);
    if (failed > 0) {
        std::cerr << "limflow: " << failed << " of " << cells << " cells failed\n";
    }
    if (cells > 0 && failed == cells) {
        return exit_fit;
    }
    return exit_ok;
}

int run_panels(const Settings& s) {
    require_set(s.input, "input");
    const auto cfg = pipeline(s);
    lf_series* raw = nullptr;
    check(lf_series_read_csv(s.input.c_str(), s.dt, &raw), "reading " + s.input);
    Series owner(raw);
    const std::string out = s.out.empty() ? "/dev/stdout" : s.out;
    double rms[3] = {0.0, 0.0, 0.0};
    check(lf_correlation_panels(raw, &cfg, out.c_str(), rms), "panels");
    std::fprintf(stderr, "window rms: white %.6g colored %.6g liang %.6g\n", rms[0], rms[1],
                 rms[2]);
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"limflow: linear inverse models and information flow"};
    app.require_subcommand(1);
    Settings s;

    struct Sub {
        CLI::App* app;
        std::vector<Binding> bindings;
        int (*run)(const Settings&);
    };
    std::vector<Sub> subs;

    auto common = [&s](CLI::App& sub, std::vector<Binding>& b) {
        sub.add_option("--config", s.config, "JSON config file; flags override its values");
        b.push_back(bind_setting(sub, "dt", s.dt, "sampling interval"));
        b.push_back(bind_setting(sub, "climatology-period", s.climatology_period,
                         "seasonal period in samples (<=1 disables)"));
        b.push_back(bind_setting(sub, "running-mean", s.running_mean, "odd smoothing width (1 disables)"));
        b.push_back(bind_setting(sub, "normalize", s.normalize, "scale each series to unit variance"));
        b.push_back(bind_setting(sub, "max-lag", s.max_lag, "longest correlation lag"));
        b.push_back(bind_setting(sub, "window", s.window, "fit window l"));
        b.push_back(bind_setting(sub, "restarts", s.restarts, "optimizer restarts"));
        b.push_back(bind_setting(sub, "max-iters", s.max_iters, "optimizer iterations per run"));
        b.push_back(bind_setting(sub, "fit-seed", s.fit_seed, "optimizer restart seed"));
    };

    {
        auto* sub = app.add_subcommand("simulate", "simulate a linear SDE to CSV");
        std::vector<Binding> b;
        sub->add_option("--config", s.config, "JSON config file; flags override its values");
        sub->add_option("--A", s.a_text, "drift matrix, rows separated by ';'");
        sub->add_option("--Q", s.q_text, "diffusion matrix (Qc when tau > 0)");
        b.push_back(bind_setting(*sub, "tau", s.tau, "noise correlation time (0: white)"));
        b.push_back(bind_setting(*sub, "dt", s.dt, "sampling interval"));
        b.push_back(bind_setting(*sub, "steps", s.steps, "number of samples"));
        b.push_back(bind_setting(*sub, "seed", s.seed, "random seed"));
        b.push_back(bind_setting(*sub, "burn-in", s.burn_in, "discarded leading steps"));
        b.push_back(bind_setting(*sub, "euler", s.euler, "Euler-Maruyama instead of exact steps"));
        b.push_back(bind_setting(*sub, "out", s.out, "output CSV (default stdout)"));
        subs.push_back({sub, std::move(b), run_simulate});
    }
    {
        auto* sub = app.add_subcommand("fit-white", "fit the white-noise model");
        std::vector<Binding> b;
        common(*sub, b);
        b.push_back(bind_setting(*sub, "input", s.input, "input CSV"));
        b.push_back(bind_setting(*sub, "out", s.out, "output JSON (default stdout)"));
        subs.push_back({sub, std::move(b), run_fit_white});
    }
    {
        auto* sub = app.add_subcommand("fit-colored", "fit the colored-noise model");
        std::vector<Binding> b;
        common(*sub, b);
        b.push_back(bind_setting(*sub, "input", s.input, "input CSV"));
        b.push_back(bind_setting(*sub, "out", s.out, "output JSON (default stdout)"));
        subs.push_back({sub, std::move(b), run_fit_colored});
    }
    {
        auto* sub = app.add_subcommand("infoflow", "information flow matrices");
        std::vector<Binding> b;
        common(*sub, b);
        b.push_back(bind_setting(*sub, "input", s.input, "input CSV"));
        b.push_back(bind_setting(*sub, "method", s.method, "model-white, model-colored, liang or all"));
        b.push_back(bind_setting(*sub, "out", s.out, "output JSON (default stdout)"));
        subs.push_back({sub, std::move(b), run_infoflow});
    }
    {
        auto* sub = app.add_subcommand("grid-scan", "index-to-gridpoint flow scan");
        std::vector<Binding> b;
        common(*sub, b);
        b.push_back(bind_setting(*sub, "index", s.index, "index CSV (time,<index>)"));
        b.push_back(bind_setting(*sub, "grid", s.grid, "grid CSV (time,cell_0,...)"));
        b.push_back(bind_setting(*sub, "coords", s.coords, "optional cell_id,lon,lat CSV"));
        b.push_back(bind_setting(*sub, "out", s.out, "results CSV (default stdout)"));
        b.push_back(bind_setting(*sub, "json", s.json_out, "results JSON"));
        b.push_back(bind_setting(*sub, "svg-prefix", s.svg_prefix, "write heatmaps with this prefix"));
        b.push_back(bind_setting(*sub, "mask", s.mask, "display clip in nats per time unit"));
        b.push_back(bind_setting(*sub, "workers", s.workers, "worker threads (0: all cores)"));
        subs.push_back({sub, std::move(b), run_grid_scan});
    }
    {
        auto* sub = app.add_subcommand("panels", "observed and model correlation functions");
        std::vector<Binding> b;
        common(*sub, b);
        b.push_back(bind_setting(*sub, "input", s.input, "input CSV"));
        b.push_back(bind_setting(*sub, "out", s.out, "output CSV (default stdout)"));
        subs.push_back({sub, std::move(b), run_panels});
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_config;
    }

    std::set<std::string> all_keys;
    for (const auto& sub : subs) {
        for (const auto& b : sub.bindings) {
            all_keys.insert(b.key);
        }
    }

    try {
        for (auto& sub : subs) {
            if (!sub.app->parsed()) {
                continue;
            }
            if (!s.a_text.empty()) {
                s.A = parse_matrix_text(s.a_text);
            }
            if (!s.q_text.empty()) {
                s.Q = parse_matrix_text(s.q_text);
            }
            apply_config(s.config, sub.bindings, all_keys, s);
            return sub.run(s);
        }
    } catch (const FitError& e) {
        std::cerr << "limflow: " << e.what() << "\n";
        return exit_fit;
    } catch (const std::exception& e) {
        std::cerr << "limflow: " << e.what() << "\n";
        return exit_config;
    }
    return exit_config;
}
