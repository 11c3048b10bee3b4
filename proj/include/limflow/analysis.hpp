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

#pragma once

#include "limflow/infoflow.hpp"
#include "limflow/lim_colored.hpp"
#include "limflow/lim_white.hpp"
#include "limflow/timeseries.hpp"

#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace limflow {

/// Monthly-data defaults: 12-month climatology, 3-month running mean, 4-month
/// fit window, correlations out to 6 months.
struct PipelineConfig {
    double dt = 1.0;
    /// Values <= 1 skip climatology removal.
    int climatology_period = 12;
    /// 1 skips smoothing.
    int running_mean = 3;
    bool normalize = false;
    /// Correlations are estimated out to max(window, max_lag).
    double max_lag = 6.0;
    FitConfig fit;
    /// Display clip for flows; 0 leaves display values equal to raw values.
    double mask = 0.02;
    /// 0 uses the hardware concurrency.
    unsigned workers = 0;
};

TimeSeriesMatrix preprocess(const TimeSeriesMatrix& x, const PipelineConfig& cfg);

/// Number of lag steps estimated by the pipeline.
Index pipeline_lags(const PipelineConfig& cfg);

struct PairFlows {
    double idx_to_cell = std::numeric_limits<double>::quiet_NaN();
    double cell_to_idx = std::numeric_limits<double>::quiet_NaN();
};

struct PairRecord {
    bool ok = false;
    std::string reason;
    PairFlows white;
    PairFlows colored;
    PairFlows liang;
    double tau = std::numeric_limits<double>::quiet_NaN();
    bool white_limit = false;
    double white_residual = std::numeric_limits<double>::quiet_NaN();
    double colored_residual = std::numeric_limits<double>::quiet_NaN();
};

/// Index series is variable 0 and the cell series variable 1. Failures inside
/// the analysis are reported in the record rather than thrown.
PairRecord run_pair_analysis(std::span<const double> index, std::span<const double> cell,
                             const PipelineConfig& cfg);

struct GridCell {
    std::string id;
    double lon = std::numeric_limits<double>::quiet_NaN();
    double lat = std::numeric_limits<double>::quiet_NaN();
};

struct GridScanRecord {
    GridCell cell;
    /// "white", "colored" or "liang".
    std::string method;
    double T_idx_to_cell = std::numeric_limits<double>::quiet_NaN();
    double T_cell_to_idx = std::numeric_limits<double>::quiet_NaN();
    double tau = std::numeric_limits<double>::quiet_NaN();
    double residual = std::numeric_limits<double>::quiet_NaN();
    double display_idx_to_cell = std::numeric_limits<double>::quiet_NaN();
    double display_cell_to_idx = std::numeric_limits<double>::quiet_NaN();
    /// "ok" or "failed: <reason>".
    std::string status;
};

struct GridScanResult {
    PipelineConfig config;
    std::vector<GridScanRecord> records;
    std::size_t cells = 0;
    std::size_t failed_cells = 0;
};

/// Clips raw to [-mask, mask]; mask == 0 returns raw unchanged.
double display_value(double raw, double mask);

/// grid holds one row per cell, aligned with index. Cells run on a bounded
/// worker pool; records come back in cell order.
GridScanResult grid_scan(std::span<const double> index, const std::vector<GridCell>& cells,
                         const Matrix& grid, const PipelineConfig& cfg);

/// Reads `time,<index>` and `time,cell_0,...`; coords_path (optional, may be
/// empty) holds `cell_id,lon,lat`.
GridScanResult grid_scan_files(const std::string& index_path, const std::string& grid_path,
                               const std::string& coords_path, const PipelineConfig& cfg);

void write_results_csv(std::ostream& out, const GridScanResult& result);
std::string results_json(const GridScanResult& result);
std::string config_json(const PipelineConfig& cfg);

/// Heatmap of one flow direction for one method, colors clipped at +-mask.
std::string render_svg(const GridScanResult& result, const std::string& method,
                       bool idx_to_cell);

/// Colored-fit noise correlation time per cell, linear scale from 0 to max tau.
std::string render_tau_svg(const GridScanResult& result);

struct PanelRow {
    double s = 0.0;
    Index i = 0;
    Index j = 0;
    double observed = 0.0;
    double white = 0.0;
    double colored = 0.0;
    /// White model built on the forward-difference dynamics.
    double liang = 0.0;
};

struct CorrelationPanels {
    std::vector<PanelRow> rows;
    WhiteModel white;
    ColoredModel colored;
    Matrix liang_A;
};

enum class PanelColumn { white, colored, liang };

/// Preprocesses x, fits both models and tabulates observed and theoretical
/// correlations for lags 0..max(window, max_lag).
CorrelationPanels export_correlation_panels(const TimeSeriesMatrix& x, const PipelineConfig& cfg);

/// Panels from already-estimated correlations and forward-difference covariances.
CorrelationPanels correlation_panels(const LaggedCorrelation& k,
                                     const ForwardDiffCovariances& diff, const FitConfig& fit);

/// Root-mean-square model error over all entries with s <= max_s.
double window_rms(const CorrelationPanels& panels, PanelColumn column, double max_s);

void write_panels_csv(std::ostream& out, const CorrelationPanels& panels);

}  // namespace limflow
