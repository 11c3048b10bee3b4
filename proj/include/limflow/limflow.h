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

/* C interface to limflow: linear inverse models under white or OU-colored
 * noise and the information flows derived from them.
 *
 * Conventions
 *   - Every fallible call returns lf_status; LF_OK is zero. On failure
 *     lf_last_error() holds a message for the calling thread.
 *   - Objects are opaque handles created by lf_*(..., T** out) and released
 *     by the matching lf_*_free(). Free functions accept NULL.
 *   - Matrices cross the boundary as row-major n*n double arrays.
 *   - Flow matrices use entry [i*n + j] for the flow from variable j into i.
 */
#ifndef LIMFLOW_H
#define LIMFLOW_H

#include <stddef.h>
#include <stdint.h>

#if defined(LIMFLOW_BUILDING_LIBRARY)
#define LIMFLOW_API __attribute__((visibility("default")))
#else
#define LIMFLOW_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum lf_status {
    LF_OK = 0,
    LF_ERR_INVALID_ARGUMENT = 1,
    LF_ERR_INSUFFICIENT_DATA = 2,
    LF_ERR_BRANCH_FAILURE = 3,
    LF_ERR_SINGULAR = 4,
    LF_ERR_COMPUTATION = 5,
    LF_ERR_DEGENERATE_VARIANCE = 6,
    LF_ERR_FIT_FAILURE = 7,
    LF_ERR_PARSE = 8,
    LF_ERR_IO = 9,
    LF_ERR_INTERNAL = 100
} lf_status;

typedef struct lf_series lf_series;
typedef struct lf_correlation lf_correlation;
typedef struct lf_white_model lf_white_model;
typedef struct lf_colored_model lf_colored_model;
typedef struct lf_scan_result lf_scan_result;

typedef struct lf_optimizer_config {
    int max_iters;
    double simplex_scale;
    int restarts;
    double tol;
    uint64_t seed;
} lf_optimizer_config;

typedef struct lf_fit_config {
    /* Window length l in units of dt's time unit. */
    double window;
    /* Optional per-lag weights for lags dt, 2dt, ..., l (NULL: uniform). */
    const double* weights;
    size_t n_weights;
    /* Optional lags for matrix-log starting points (NULL: every window lag). */
    const double* init_lags;
    size_t n_init_lags;
    lf_optimizer_config optimizer;
    double stability_penalty;
    double diffusion_penalty;
    int max_colored_starts;
} lf_fit_config;

typedef struct lf_pipeline_config {
    double dt;
    int climatology_period; /* <= 1 disables */
    int running_mean;       /* odd width, 1 disables */
    int normalize;          /* nonzero: divide each series by its stdev */
    double max_lag;
    lf_fit_config fit;
    double mask;
    unsigned workers; /* 0: hardware concurrency */
} lf_pipeline_config;

typedef struct lf_sim_spec {
    size_t n;
    const double* A; /* row-major n*n */
    const double* Q; /* white Q, or colored Qc when tau > 0 */
    double tau;
    double dt;
    size_t steps;
    uint64_t seed;
    size_t burn_in;
    int euler_maruyama; /* nonzero: Euler-Maruyama instead of the exact transition */
} lf_sim_spec;

typedef struct lf_pair_record {
    int ok;
    double white_idx_to_cell, white_cell_to_idx;
    double colored_idx_to_cell, colored_cell_to_idx;
    double liang_idx_to_cell, liang_cell_to_idx;
    double tau;
    int white_limit;
    double white_residual, colored_residual;
    char reason[256];
} lf_pair_record;

LIMFLOW_API const char* lf_version(void);
LIMFLOW_API const char* lf_last_error(void);
LIMFLOW_API const char* lf_status_string(lf_status status);

LIMFLOW_API void lf_fit_config_default(lf_fit_config* cfg);
LIMFLOW_API void lf_pipeline_config_default(lf_pipeline_config* cfg);

/* ---- time series ------------------------------------------------------ */

/* data is n_vars x length, row-major (one row per variable). */
LIMFLOW_API lf_status lf_series_create(size_t n_vars, size_t length, const double* data,
                                       double dt, int t0_phase, lf_series** out);
/* dt <= 0 infers the interval from the time column. */
LIMFLOW_API lf_status lf_series_read_csv(const char* path, double dt, lf_series** out);
LIMFLOW_API lf_status lf_series_write_csv(const lf_series* series, const char* path);
LIMFLOW_API void lf_series_free(lf_series* series);
LIMFLOW_API size_t lf_series_vars(const lf_series* series);
LIMFLOW_API size_t lf_series_length(const lf_series* series);
LIMFLOW_API double lf_series_dt(const lf_series* series);
/* Name of variable i, or NULL when out of range. */
LIMFLOW_API const char* lf_series_name(const lf_series* series, size_t i);
/* Copies n_vars*length values, row-major, into out (capacity in doubles). */
LIMFLOW_API lf_status lf_series_copy_data(const lf_series* series, double* out,
                                          size_t capacity);
LIMFLOW_API lf_status lf_series_preprocess(const lf_series* series,
                                           const lf_pipeline_config* cfg, lf_series** out);

/* ---- correlations ----------------------------------------------------- */

LIMFLOW_API lf_status lf_lagged_correlation(const lf_series* series, size_t max_lag,
                                            lf_correlation** out);
LIMFLOW_API void lf_correlation_free(lf_correlation* corr);
LIMFLOW_API size_t lf_correlation_vars(const lf_correlation* corr);
LIMFLOW_API size_t lf_correlation_max_lag(const lf_correlation* corr);
LIMFLOW_API lf_status lf_correlation_get(const lf_correlation* corr, size_t lag, double* out);

/* ---- white-noise model ------------------------------------------------ */

LIMFLOW_API lf_status lf_single_lag_dynamics(const lf_correlation* corr, double rho,
                                             double* a_out);
LIMFLOW_API lf_status lf_white_correlation(size_t n, const double* a, const double* c,
                                           const double* lags, size_t n_lags, double* out);
LIMFLOW_API lf_status lf_white_diffusion(size_t n, const double* a, const double* c,
                                         double* q_out);
/* cfg may be NULL for defaults. */
LIMFLOW_API lf_status lf_fit_white(const lf_correlation* corr, const lf_fit_config* cfg,
                                   lf_white_model** out);
LIMFLOW_API void lf_white_model_free(lf_white_model* model);
LIMFLOW_API size_t lf_white_model_vars(const lf_white_model* model);
/* Any output pointer may be NULL. */
LIMFLOW_API lf_status lf_white_model_get(const lf_white_model* model, double* a, double* q,
                                         double* c, double* residual, int* q_positive_definite);

/* ---- colored-noise model ---------------------------------------------- */

LIMFLOW_API lf_status lf_memory_factor(size_t n, const double* a, double tau, double* b_out);
LIMFLOW_API lf_status lf_colored_diffusion(size_t n, const double* a, double tau,
                                           const double* c, double* qc_out);
LIMFLOW_API lf_status lf_colored_correlation(size_t n, const double* a, double tau,
                                             const double* qc, const double* c,
                                             const double* lags, size_t n_lags, double* out);
/* warm may be NULL, in which case the white fit is computed internally. */
LIMFLOW_API lf_status lf_fit_colored(const lf_correlation* corr, const lf_fit_config* cfg,
                                     const lf_white_model* warm, lf_colored_model** out);
LIMFLOW_API void lf_colored_model_free(lf_colored_model* model);
LIMFLOW_API size_t lf_colored_model_vars(const lf_colored_model* model);
LIMFLOW_API lf_status lf_colored_model_get(const lf_colored_model* model, double* a,
                                           double* tau, double* qc, double* b, double* c,
                                           double* residual, int* white_limit,
                                           int* qc_positive_definite);

/* ---- information flow ------------------------------------------------- */

LIMFLOW_API lf_status lf_info_flow_model(size_t n, const double* a, const double* c,
                                         double* t_out);
LIMFLOW_API lf_status lf_info_flow_liang(const lf_series* series, double* t_out);
/* labels: +1 excites, -1 stabilizes, 0 none (|T| <= eps). */
LIMFLOW_API lf_status lf_classify_flows(size_t n, const double* t, double eps, int* labels);

/* ---- simulation ------------------------------------------------------- */

LIMFLOW_API lf_status lf_stationary_covariance(const lf_sim_spec* spec, double* c_out);
LIMFLOW_API lf_status lf_simulate(const lf_sim_spec* spec, lf_series** out);

/* ---- pipeline --------------------------------------------------------- */

LIMFLOW_API lf_status lf_run_pair_analysis(const double* index, const double* cell,
                                           size_t length, const lf_pipeline_config* cfg,
                                           lf_pair_record* out);
/* coords_csv may be NULL. */
LIMFLOW_API lf_status lf_grid_scan_files(const char* index_csv, const char* grid_csv,
                                         const char* coords_csv, const lf_pipeline_config* cfg,
                                         lf_scan_result** out);
LIMFLOW_API void lf_scan_result_free(lf_scan_result* result);
LIMFLOW_API size_t lf_scan_result_cells(const lf_scan_result* result);
LIMFLOW_API size_t lf_scan_result_failed_cells(const lf_scan_result* result);
LIMFLOW_API lf_status lf_scan_result_write_csv(const lf_scan_result* result, const char* path);
LIMFLOW_API lf_status lf_scan_result_write_json(const lf_scan_result* result, const char* path);
/* Writes <prefix>_<method>_idx_to_cell.svg, <prefix>_<method>_cell_to_idx.svg
 * for every method, and <prefix>_tau.svg. */
LIMFLOW_API lf_status lf_scan_result_write_svg(const lf_scan_result* result, const char* prefix);

/* Writes the long-format panel table (s,i,j,observed,white,colored,liang).
 * rms_out, when not NULL, receives the window RMS errors of the white,
 * colored and forward-difference models over [0, window]. */
LIMFLOW_API lf_status lf_correlation_panels(const lf_series* series,
                                            const lf_pipeline_config* cfg, const char* out_csv,
                                            double* rms_out);

/* Returns a malloc'd JSON echo of cfg; release with lf_string_free. */
LIMFLOW_API lf_status lf_pipeline_config_json(const lf_pipeline_config* cfg, char** out);
LIMFLOW_API void lf_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* LIMFLOW_H */
