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

#include "limflow/limflow.h"

#include "limflow/analysis.hpp"
#include "limflow/csv.hpp"
#include "limflow/error.hpp"
#include "limflow/infoflow.hpp"
#include "limflow/lim_colored.hpp"
#include "limflow/lim_white.hpp"
#include "limflow/simulator.hpp"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <memory>
#include <new>
#include <string>
#include <vector>

using limflow::Error;
using limflow::ErrorCode;
using limflow::Index;
using limflow::Matrix;

struct lf_series {
    limflow::TimeSeriesMatrix x;
    std::vector<std::string> names;
};

struct lf_correlation {
    limflow::LaggedCorrelation k;
};

struct lf_white_model {
    limflow::WhiteModel m;
};

struct lf_colored_model {
    limflow::ColoredModel m;
};

struct lf_scan_result {
    limflow::GridScanResult r;
};

namespace {

thread_local std::string last_error;

template <class F>
lf_status guard(F&& body) noexcept {
    try {
        last_error.clear();
        body();
        return LF_OK;
    } catch (const Error& e) {
        last_error = e.what();
        return static_cast<lf_status>(e.code());
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return LF_ERR_INTERNAL;
    } catch (const std::exception& e) {
        last_error = e.what();
        return LF_ERR_INTERNAL;
    } catch (...) {
        last_error = "unknown exception";
        return LF_ERR_INTERNAL;
    }
}

void require(bool condition, const char* what) {
    if (!condition) {
        throw Error(ErrorCode::invalid_argument, what);
    }
}

Matrix read_matrix(std::size_t n, const double* data, const char* what) {
    require(data != nullptr, what);
    require(n > 0, "matrix order must be positive");
    Matrix m(static_cast<Index>(n), static_cast<Index>(n));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = data[i * n + j];
        }
    }
    return m;
}

void write_matrix(const Matrix& m, double* out) {
    if (out == nullptr) {
        return;
    }
    const auto n = static_cast<std::size_t>(m.rows());
    const auto cols = static_cast<std::size_t>(m.cols());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            out[i * cols + j] = m(static_cast<Index>(i), static_cast<Index>(j));
        }
    }
}

limflow::FitConfig to_fit(const lf_fit_config* cfg) {
    limflow::FitConfig fit;
    if (cfg == nullptr) {
        return fit;
    }
    fit.window = cfg->window;
    if (cfg->weights != nullptr) {
        fit.weights.assign(cfg->weights, cfg->weights + cfg->n_weights);
    }
    if (cfg->init_lags != nullptr) {
        fit.init_lags.assign(cfg->init_lags, cfg->init_lags + cfg->n_init_lags);
    }
    fit.optimizer.max_iters = cfg->optimizer.max_iters;
    fit.optimizer.simplex_scale = cfg->optimizer.simplex_scale;
    fit.optimizer.restarts = cfg->optimizer.restarts;
    fit.optimizer.tol = cfg->optimizer.tol;
    fit.optimizer.seed = cfg->optimizer.seed;
    fit.stability_penalty = cfg->stability_penalty;
    fit.diffusion_penalty = cfg->diffusion_penalty;
    fit.max_colored_starts = cfg->max_colored_starts;
    return fit;
}

limflow::PipelineConfig to_pipeline(const lf_pipeline_config* cfg) {
    limflow::PipelineConfig p;
    if (cfg == nullptr) {
        return p;
    }
    p.dt = cfg->dt;
    p.climatology_period = cfg->climatology_period;
    p.running_mean = cfg->running_mean;
    p.normalize = cfg->normalize != 0;
    p.max_lag = cfg->max_lag;
    p.fit = to_fit(&cfg->fit);
    p.mask = cfg->mask;
    p.workers = cfg->workers;
    return p;
}

limflow::SimSpec to_spec(const lf_sim_spec* spec) {
    require(spec != nullptr, "simulation spec is NULL");
    limflow::SimSpec s;
    s.A = read_matrix(spec->n, spec->A, "A is NULL");
    s.Q = read_matrix(spec->n, spec->Q, "Q is NULL");
    s.tau = spec->tau;
    s.dt = spec->dt;
    s.steps = static_cast<Index>(spec->steps);
    s.seed = spec->seed;
    s.burn_in = static_cast<Index>(spec->burn_in);
    s.scheme = spec->euler_maruyama != 0 ? limflow::SimScheme::euler_maruyama
                                         : limflow::SimScheme::exact;
    return s;
}

std::vector<std::string> default_names(Index n) {
    std::vector<std::string> names;
    for (Index i = 0; i < n; ++i) {
        names.push_back("x" + std::to_string(i + 1));
    }
    return names;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
    }
    out << text;
}

}  // namespace

extern "C" {

const char* lf_version(void) { return "0.1.0"; }

const char* lf_last_error(void) { return last_error.c_str(); }

const char* lf_status_string(lf_status status) {
    if (status == LF_OK) {
        return "ok";
    }
    if (status == LF_ERR_INTERNAL) {
        return "internal error";
    }
    return limflow::to_string(static_cast<ErrorCode>(status));
}

void lf_fit_config_default(lf_fit_config* cfg) {
    if (cfg == nullptr) {
        return;
    }
    const limflow::FitConfig fit;
    *cfg = lf_fit_config{};
    cfg->window = fit.window;
    cfg->optimizer.max_iters = fit.optimizer.max_iters;
    cfg->optimizer.simplex_scale = fit.optimizer.simplex_scale;
    cfg->optimizer.restarts = fit.optimizer.restarts;
    cfg->optimizer.tol = fit.optimizer.tol;
    cfg->optimizer.seed = fit.optimizer.seed;
    cfg->stability_penalty = fit.stability_penalty;
    cfg->diffusion_penalty = fit.diffusion_penalty;
    cfg->max_colored_starts = fit.max_colored_starts;
}

void lf_pipeline_config_default(lf_pipeline_config* cfg) {
    if (cfg == nullptr) {
        return;
    }
    const limflow::PipelineConfig p;
    *cfg = lf_pipeline_config{};
    cfg->dt = p.dt;
    cfg->climatology_period = p.climatology_period;
    cfg->running_mean = p.running_mean;
    cfg->normalize = p.normalize ? 1 : 0;
    cfg->max_lag = p.max_lag;
    lf_fit_config_default(&cfg->fit);
    cfg->mask = p.mask;
    cfg->workers = p.workers;
}

lf_status lf_series_create(size_t n_vars, size_t length, const double* data, double dt,
                           int t0_phase, lf_series** out) {
    return guard([&] {
        require(out != nullptr && data != nullptr, "NULL argument");
        require(n_vars > 0 && length > 0, "series must be non-empty");
        auto s = std::make_unique<lf_series>();
        s->x.dt = dt;
        s->x.t0_phase = t0_phase;
        s->x.data.resize(static_cast<Index>(n_vars), static_cast<Index>(length));
        for (std::size_t i = 0; i < n_vars; ++i) {
            for (std::size_t t = 0; t < length; ++t) {
                s->x.data(static_cast<Index>(i), static_cast<Index>(t)) = data[i * length + t];
            }
        }
        require(dt > 0.0, "dt must be positive");
        s->names = default_names(static_cast<Index>(n_vars));
        *out = s.release();
    });
}

lf_status lf_series_read_csv(const char* path, double dt, lf_series** out) {
    return guard([&] {
        require(path != nullptr && out != nullptr, "NULL argument");
        const auto csv = limflow::read_series_csv_file(path);
        auto s = std::make_unique<lf_series>();
        s->x = limflow::to_time_series(csv, dt);
        s->names = csv.names;
        *out = s.release();
    });
}

lf_status lf_series_write_csv(const lf_series* series, const char* path) {
    return guard([&] {
        require(series != nullptr && path != nullptr, "NULL argument");
        limflow::write_series_csv_file(path, series->names, series->x);
    });
}

void lf_series_free(lf_series* series) { delete series; }

size_t lf_series_vars(const lf_series* series) {
    return series != nullptr ? static_cast<size_t>(series->x.variables()) : 0;
}

size_t lf_series_length(const lf_series* series) {
    return series != nullptr ? static_cast<size_t>(series->x.length()) : 0;
}

double lf_series_dt(const lf_series* series) { return series != nullptr ? series->x.dt : 0.0; }

const char* lf_series_name(const lf_series* series, size_t i) {
    if (series == nullptr || i >= series->names.size()) {
        return nullptr;
    }
    return series->names[i].c_str();
}

lf_status lf_series_copy_data(const lf_series* series, double* out, size_t capacity) {
    return guard([&] {
        require(series != nullptr && out != nullptr, "NULL argument");
        const auto n = static_cast<std::size_t>(series->x.variables());
        const auto len = static_cast<std::size_t>(series->x.length());
        require(capacity >= n * len, "output buffer too small");
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t t = 0; t < len; ++t) {
                out[i * len + t] = series->x.data(static_cast<Index>(i), static_cast<Index>(t));
            }
        }
    });
}

lf_status lf_series_preprocess(const lf_series* series, const lf_pipeline_config* cfg,
                               lf_series** out) {
    return guard([&] {
        require(series != nullptr && out != nullptr, "NULL argument");
        auto s = std::make_unique<lf_series>();
        s->x = limflow::preprocess(series->x, to_pipeline(cfg));
        s->names = series->names;
        *out = s.release();
    });
}

lf_status lf_lagged_correlation(const lf_series* series, size_t max_lag, lf_correlation** out) {
    return guard([&] {
        require(series != nullptr && out != nullptr, "NULL argument");
        auto c = std::make_unique<lf_correlation>();
        c->k = limflow::lagged_correlation(series->x, static_cast<Index>(max_lag));
        *out = c.release();
    });
}

void lf_correlation_free(lf_correlation* corr) { delete corr; }

size_t lf_correlation_vars(const lf_correlation* corr) {
    return corr != nullptr ? static_cast<size_t>(corr->k.variables()) : 0;
}

size_t lf_correlation_max_lag(const lf_correlation* corr) {
    return corr != nullptr ? static_cast<size_t>(corr->k.max_lag()) : 0;
}

lf_status lf_correlation_get(const lf_correlation* corr, size_t lag, double* out) {
    return guard([&] {
        require(corr != nullptr && out != nullptr, "NULL argument");
        require(lag <= static_cast<size_t>(corr->k.max_lag()), "lag out of range");
        write_matrix(corr->k.at(static_cast<Index>(lag)), out);
    });
}

lf_status lf_single_lag_dynamics(const lf_correlation* corr, double rho, double* a_out) {
    return guard([&] {
        require(corr != nullptr && a_out != nullptr, "NULL argument");
        write_matrix(limflow::single_lag_dynamics(corr->k, rho), a_out);
    });
}

lf_status lf_white_correlation(size_t n, const double* a, const double* c, const double* lags,
                               size_t n_lags, double* out) {
    return guard([&] {
        require(lags != nullptr && out != nullptr, "NULL argument");
        const auto mats = limflow::white_correlation(read_matrix(n, a, "A is NULL"),
                                                     read_matrix(n, c, "C is NULL"),
                                                     std::span<const double>(lags, n_lags));
        for (std::size_t s = 0; s < mats.size(); ++s) {
            write_matrix(mats[s], out + s * n * n);
        }
    });
}

lf_status lf_white_diffusion(size_t n, const double* a, const double* c, double* q_out) {
    return guard([&] {
        require(q_out != nullptr, "NULL argument");
        write_matrix(limflow::white_diffusion(read_matrix(n, a, "A is NULL"),
                                              read_matrix(n, c, "C is NULL")),
                     q_out);
    });
}

lf_status lf_fit_white(const lf_correlation* corr, const lf_fit_config* cfg,
                       lf_white_model** out) {
    return guard([&] {
        require(corr != nullptr && out != nullptr, "NULL argument");
        auto m = std::make_unique<lf_white_model>();
        m->m = limflow::fit_white(corr->k, to_fit(cfg));
        *out = m.release();
    });
}

void lf_white_model_free(lf_white_model* model) { delete model; }

size_t lf_white_model_vars(const lf_white_model* model) {
    return model != nullptr ? static_cast<size_t>(model->m.A.rows()) : 0;
}

lf_status lf_white_model_get(const lf_white_model* model, double* a, double* q, double* c,
                             double* residual, int* q_positive_definite) {
    return guard([&] {
        require(model != nullptr, "NULL model");
        write_matrix(model->m.A, a);
        write_matrix(model->m.Q, q);
        write_matrix(model->m.C, c);
        if (residual != nullptr) {
            *residual = model->m.fit_residual;
        }
        if (q_positive_definite != nullptr) {
            *q_positive_definite = model->m.q_positive_definite ? 1 : 0;
        }
    });
}

lf_status lf_memory_factor(size_t n, const double* a, double tau, double* b_out) {
    return guard([&] {
        require(b_out != nullptr, "NULL argument");
        write_matrix(limflow::memory_factor(read_matrix(n, a, "A is NULL"), tau), b_out);
    });
}

lf_status lf_colored_diffusion(size_t n, const double* a, double tau, const double* c,
                               double* qc_out) {
    return guard([&] {
        require(qc_out != nullptr, "NULL argument");
        write_matrix(limflow::colored_diffusion(read_matrix(n, a, "A is NULL"), tau,
                                                read_matrix(n, c, "C is NULL")),
                     qc_out);
    });
}

lf_status lf_colored_correlation(size_t n, const double* a, double tau, const double* qc,
                                 const double* c, const double* lags, size_t n_lags,
                                 double* out) {
    return guard([&] {
        require(lags != nullptr && out != nullptr, "NULL argument");
        const auto mats = limflow::colored_correlation(
            read_matrix(n, a, "A is NULL"), tau, read_matrix(n, qc, "Qc is NULL"),
            read_matrix(n, c, "C is NULL"), std::span<const double>(lags, n_lags));
        for (std::size_t s = 0; s < mats.size(); ++s) {
            write_matrix(mats[s], out + s * n * n);
        }
    });
}

lf_status lf_fit_colored(const lf_correlation* corr, const lf_fit_config* cfg,
                         const lf_white_model* warm, lf_colored_model** out) {
    return guard([&] {
        require(corr != nullptr && out != nullptr, "NULL argument");
        auto m = std::make_unique<lf_colored_model>();
        m->m = limflow::fit_colored(corr->k, to_fit(cfg), warm != nullptr ? &warm->m : nullptr);
        *out = m.release();
    });
}

void lf_colored_model_free(lf_colored_model* model) { delete model; }

size_t lf_colored_model_vars(const lf_colored_model* model) {
    return model != nullptr ? static_cast<size_t>(model->m.A.rows()) : 0;
}

lf_status lf_colored_model_get(const lf_colored_model* model, double* a, double* tau,
                               double* qc, double* b, double* c, double* residual,
                               int* white_limit, int* qc_positive_definite) {
    return guard([&] {
        require(model != nullptr, "NULL model");
        write_matrix(model->m.A, a);
        write_matrix(model->m.Qc, qc);
        if (b != nullptr) {
            write_matrix(model->m.B(), b);
        }
        write_matrix(model->m.C, c);
        if (tau != nullptr) {
            *tau = model->m.tau;
        }
        if (residual != nullptr) {
            *residual = model->m.fit_residual;
        }
        if (white_limit != nullptr) {
            *white_limit = model->m.white_limit ? 1 : 0;
        }
        if (qc_positive_definite != nullptr) {
            *qc_positive_definite = model->m.qc_positive_definite ? 1 : 0;
        }
    });
}

lf_status lf_info_flow_model(size_t n, const double* a, const double* c, double* t_out) {
    return guard([&] {
        require(t_out != nullptr, "NULL argument");
        write_matrix(limflow::info_flow_from_model(read_matrix(n, a, "A is NULL"),
                                                   read_matrix(n, c, "C is NULL"))
                         .T,
                     t_out);
    });
}

lf_status lf_info_flow_liang(const lf_series* series, double* t_out) {
    return guard([&] {
        require(series != nullptr && t_out != nullptr, "NULL argument");
        write_matrix(limflow::info_flow_liang(series->x).T, t_out);
    });
}

lf_status lf_classify_flows(size_t n, const double* t, double eps, int* labels) {
    return guard([&] {
        require(labels != nullptr, "NULL argument");
        limflow::InfoFlowMatrix flows;
        flows.T = read_matrix(n, t, "T is NULL");
        const auto classified = limflow::classify_flows(flows, eps);
        for (std::size_t k = 0; k < n * n; ++k) {
            const auto label = classified.labels[k];
            labels[k] = label == limflow::FlowLabel::excites      ? 1
                        : label == limflow::FlowLabel::stabilizes ? -1
                                                                  : 0;
        }
    });
}

lf_status lf_stationary_covariance(const lf_sim_spec* spec, double* c_out) {
    return guard([&] {
        require(c_out != nullptr, "NULL argument");
        write_matrix(limflow::stationary_covariance(to_spec(spec)), c_out);
    });
}

lf_status lf_simulate(const lf_sim_spec* spec, lf_series** out) {
    return guard([&] {
        require(out != nullptr, "NULL argument");
        auto s = std::make_unique<lf_series>();
        s->x = limflow::simulate(to_spec(spec));
        s->names = default_names(s->x.variables());
        *out = s.release();
    });
}

lf_status lf_run_pair_analysis(const double* index, const double* cell, size_t length,
                               const lf_pipeline_config* cfg, lf_pair_record* out) {
    return guard([&] {
        require(index != nullptr && cell != nullptr && out != nullptr, "NULL argument");
        const auto rec = limflow::run_pair_analysis(std::span<const double>(index, length),
                                                    std::span<const double>(cell, length),
                                                    to_pipeline(cfg));
        *out = lf_pair_record{};
        out->ok = rec.ok ? 1 : 0;
        out->white_idx_to_cell = rec.white.idx_to_cell;
        out->white_cell_to_idx = rec.white.cell_to_idx;
        out->colored_idx_to_cell = rec.colored.idx_to_cell;
        out->colored_cell_to_idx = rec.colored.cell_to_idx;
        out->liang_idx_to_cell = rec.liang.idx_to_cell;
        out->liang_cell_to_idx = rec.liang.cell_to_idx;
        out->tau = rec.tau;
        out->white_limit = rec.white_limit ? 1 : 0;
        out->white_residual = rec.white_residual;
        out->colored_residual = rec.colored_residual;
        std::strncpy(out->reason, rec.reason.c_str(), sizeof(out->reason) - 1);
    });
}

lf_status lf_grid_scan_files(const char* index_csv, const char* grid_csv, const char* coords_csv,
                             const lf_pipeline_config* cfg, lf_scan_result** out) {
    return guard([&] {
        require(index_csv != nullptr && grid_csv != nullptr && out != nullptr, "NULL argument");
        auto r = std::make_unique<lf_scan_result>();
        r->r = limflow::grid_scan_files(index_csv, grid_csv,
                                        coords_csv != nullptr ? coords_csv : "",
                                        to_pipeline(cfg));
        *out = r.release();
    });
}

void lf_scan_result_free(lf_scan_result* result) { delete result; }

size_t lf_scan_result_cells(const lf_scan_result* result) {
    return result != nullptr ? result->r.cells : 0;
}

size_t lf_scan_result_failed_cells(const lf_scan_result* result) {
    return result != nullptr ? result->r.failed_cells : 0;
}

lf_status lf_scan_result_write_csv(const lf_scan_result* result, const char* path) {
    return guard([&] {
        require(result != nullptr && path != nullptr, "NULL argument");
        std::ofstream out(path);
        if (!out) {
            throw Error(ErrorCode::io_error, std::string("cannot write '") + path + "'");
        }
        limflow::write_results_csv(out, result->r);
    });
}

lf_status lf_scan_result_write_json(const lf_scan_result* result, const char* path) {
    return guard([&] {
        require(result != nullptr && path != nullptr, "NULL argument");
        write_text(path, limflow::results_json(result->r));
    });
}

lf_status lf_scan_result_write_svg(const lf_scan_result* result, const char* prefix) {
    return guard([&] {
        require(result != nullptr && prefix != nullptr, "NULL argument");
        const std::string base(prefix);
        for (const char* method : {"white", "colored", "liang"}) {
            write_text(base + "_" + method + "_idx_to_cell.svg",
                       limflow::render_svg(result->r, method, true));
            write_text(base + "_" + method + "_cell_to_idx.svg",
                       limflow::render_svg(result->r, method, false));
        }
        write_text(base + "_tau.svg", limflow::render_tau_svg(result->r));
    });
}

lf_status lf_correlation_panels(const lf_series* series, const lf_pipeline_config* cfg,
                                const char* out_csv, double* rms_out) {
    return guard([&] {
        require(series != nullptr, "NULL series");
        const auto pipeline = to_pipeline(cfg);
        const auto panels = limflow::export_correlation_panels(series->x, pipeline);
        if (out_csv != nullptr) {
            std::ofstream out(out_csv);
            if (!out) {
                throw Error(ErrorCode::io_error, std::string("cannot write '") + out_csv + "'");
            }
            limflow::write_panels_csv(out, panels);
        }
        if (rms_out != nullptr) {
            const double window = pipeline.fit.window;
            rms_out[0] = limflow::window_rms(panels, limflow::PanelColumn::white, window);
            rms_out[1] = limflow::window_rms(panels, limflow::PanelColumn::colored, window);
            rms_out[2] = limflow::window_rms(panels, limflow::PanelColumn::liang, window);
        }
    });
}

lf_status lf_pipeline_config_json(const lf_pipeline_config* cfg, char** out) {
    return guard([&] {
        require(out != nullptr, "NULL argument");
        const std::string text = limflow::config_json(to_pipeline(cfg));
        char* buf = static_cast<char*>(std::malloc(text.size() + 1));
        if (buf == nullptr) {
            throw std::bad_alloc();
        }
        std::memcpy(buf, text.c_str(), text.size() + 1);
        *out = buf;
    });
}

void lf_string_free(char* s) { std::free(s); }

}  // extern "C"
