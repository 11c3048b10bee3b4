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

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

namespace limflow {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string format_number(double v) {
    if (std::isnan(v)) {
        return {};
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string sanitize(std::string s) {
    std::replace(s.begin(), s.end(), ',', ';');
    std::replace(s.begin(), s.end(), '\n', ' ');
    return s;
}

nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

PairFlows pair_flows(const InfoFlowMatrix& flows) {
    // Variable 0 is the index, variable 1 the cell; T(i, j) is the flow j -> i.
    return {flows.T(1, 0), flows.T(0, 1)};
}

}  // namespace

TimeSeriesMatrix preprocess(const TimeSeriesMatrix& x, const PipelineConfig& cfg) {
    TimeSeriesMatrix out = x;
    if (cfg.climatology_period > 1) {
        out = remove_climatology(out, cfg.climatology_period);
    }
    if (cfg.running_mean > 1) {
        out = running_mean(out, cfg.running_mean);
    }
    if (cfg.normalize) {
        out = normalize_variance(out);
    }
    // Smoothing trims the ends, so the climatology-free rows need re-centering.
    out.data.colwise() -= out.data.rowwise().mean();
    return out;
}

Index pipeline_lags(const PipelineConfig& cfg) {
    return window_steps(std::max(cfg.fit.window, cfg.max_lag), cfg.dt);
}

PairRecord run_pair_analysis(std::span<const double> index, std::span<const double> cell,
                             const PipelineConfig& cfg) {
    if (index.size() != cell.size()) {
        throw Error(ErrorCode::invalid_argument,
                    "run_pair_analysis: index and cell series differ in length");
    }
    PairRecord record;
    try {
        const Index window = window_steps(cfg.fit.window, cfg.dt);
        const auto len = static_cast<Index>(index.size());
        if (len < 10 * window) {
            record.reason = "insufficient length: " + std::to_string(len) + " samples, need " +
                            std::to_string(10 * window);
            return record;
        }
        TimeSeriesMatrix x;
        x.dt = cfg.dt;
        x.data.resize(2, len);
        for (Index t = 0; t < len; ++t) {
            x.data(0, t) = index[static_cast<std::size_t>(t)];
            x.data(1, t) = cell[static_cast<std::size_t>(t)];
        }
        x = preprocess(x, cfg);

        const LaggedCorrelation k = lagged_correlation(x, pipeline_lags(cfg));
        if (nearly_singular_covariance(k.cov)) {
            record.reason = "singular covariance";
            return record;
        }
        const WhiteModel white = fit_white(k, cfg.fit);
        const ColoredModel colored = fit_colored(k, cfg.fit, &white);

        record.white = pair_flows(info_flow_from_model(white.A, white.C));
        record.colored = pair_flows(info_flow_from_model(colored.A, colored.C));
        record.liang = pair_flows(info_flow_liang(x));
        record.tau = colored.tau;
        record.white_limit = colored.white_limit;
        record.white_residual = white.fit_residual;
        record.colored_residual = colored.fit_residual;
        record.ok = true;
    } catch (const Error& e) {
        record = PairRecord{};
        record.reason = std::string(to_string(e.code())) + ": " + e.what();
    }
    return record;
}

double display_value(double raw, double mask) {
    if (!(mask > 0.0) || std::isnan(raw)) {
        return raw;
    }
    return std::clamp(raw, -mask, mask);
}

GridScanResult grid_scan(std::span<const double> index, const std::vector<GridCell>& cells,
                         const Matrix& grid, const PipelineConfig& cfg) {
    if (static_cast<Index>(cells.size()) != grid.rows()) {
        throw Error(ErrorCode::invalid_argument, "grid_scan: cell list and grid rows differ");
    }
    if (cells.empty()) {
        throw Error(ErrorCode::invalid_argument, "grid_scan: no grid cells");
    }
    if (grid.cols() != static_cast<Index>(index.size())) {
        throw Error(ErrorCode::invalid_argument,
                    "grid_scan: grid rows are not aligned with the index series");
    }
    if (!(cfg.mask >= 0.0)) {
        throw Error(ErrorCode::invalid_argument, "grid_scan: mask must be >= 0");
    }

    std::vector<PairRecord> pairs(cells.size());
    std::atomic<std::size_t> next{0};
    const auto worker = [&]() {
        std::vector<double> series(index.size());
        for (std::size_t c = next++; c < cells.size(); c = next++) {
            for (Index t = 0; t < grid.cols(); ++t) {
                series[static_cast<std::size_t>(t)] = grid(static_cast<Index>(c), t);
            }
            pairs[c] = run_pair_analysis(index, series, cfg);
        }
    };
    unsigned workers = cfg.workers != 0 ? cfg.workers : std::thread::hardware_concurrency();
    workers = std::clamp<unsigned>(workers, 1, static_cast<unsigned>(cells.size()));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }

    GridScanResult result;
    result.config = cfg;
    result.cells = cells.size();
    for (std::size_t c = 0; c < cells.size(); ++c) {
        const PairRecord& pair = pairs[c];
        if (!pair.ok) {
            ++result.failed_cells;
        }
        const auto add = [&](const char* method, const PairFlows& flows, double tau,
                             double residual) {
            GridScanRecord rec;
            rec.cell = cells[c];
            rec.method = method;
            rec.status = pair.ok ? "ok" : "failed: " + sanitize(pair.reason);
            if (pair.ok) {
                rec.T_idx_to_cell = flows.idx_to_cell;
                rec.T_cell_to_idx = flows.cell_to_idx;
                rec.tau = tau;
                rec.residual = residual;
                rec.display_idx_to_cell = display_value(flows.idx_to_cell, cfg.mask);
                rec.display_cell_to_idx = display_value(flows.cell_to_idx, cfg.mask);
            }
            result.records.push_back(std::move(rec));
        };
        add("white", pair.white, kNaN, pair.white_residual);
        add("colored", pair.colored, pair.tau, pair.colored_residual);
        add("liang", pair.liang, kNaN, kNaN);
    }
    return result;
}

GridScanResult grid_scan_files(const std::string& index_path, const std::string& grid_path,
                               const std::string& coords_path, const PipelineConfig& cfg) {
    const CsvSeries index = read_series_csv_file(index_path);
    if (index.names.size() != 1) {
        throw Error(ErrorCode::parse_error,
                    index_path + ": index file must have exactly one variable column");
    }
    const CsvSeries grid = read_series_csv_file(grid_path);
    if (grid.data.cols() != index.data.cols()) {
        throw Error(ErrorCode::parse_error,
                    grid_path + ": " + std::to_string(grid.data.cols()) +
                        " rows, index has " + std::to_string(index.data.cols()));
    }

    std::vector<GridCell> cells;
    for (const auto& name : grid.names) {
        cells.push_back({name, kNaN, kNaN});
    }
    if (!coords_path.empty()) {
        std::ifstream in(coords_path);
        if (!in) {
            throw Error(ErrorCode::io_error, "cannot open '" + coords_path + "'");
        }
        std::map<std::string, std::pair<double, double>> coords;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            const auto fields = split_csv_row(line);
            if (fields.empty() || (fields.size() == 1 && fields[0].empty())) {
                continue;
            }
            if (line_no == 1 && fields[0] == "cell_id") {
                continue;
            }
            const std::string ctx = coords_path + ":" + std::to_string(line_no);
            if (fields.size() != 3) {
                throw Error(ErrorCode::parse_error, ctx + ": expected cell_id,lon,lat");
            }
            coords[fields[0]] = {parse_double(fields[1], ctx), parse_double(fields[2], ctx)};
        }
        for (auto& cell : cells) {
            if (const auto it = coords.find(cell.id); it != coords.end()) {
                cell.lon = it->second.first;
                cell.lat = it->second.second;
            }
        }
    }

    const std::vector<double> index_series(index.data.data(),
                                           index.data.data() + index.data.cols());
    return grid_scan(index_series, cells, grid.data, cfg);
}

void write_results_csv(std::ostream& out, const GridScanResult& result) {
    out << "cell_id,lon,lat,method,T_idx_to_cell,T_cell_to_idx,tau,residual,"
           "display_T_idx_to_cell,display_T_cell_to_idx,status\n";
    for (const auto& r : result.records) {
        out << r.cell.id << ',' << format_number(r.cell.lon) << ',' << format_number(r.cell.lat)
            << ',' << r.method << ',' << format_number(r.T_idx_to_cell) << ','
            << format_number(r.T_cell_to_idx) << ',' << format_number(r.tau) << ','
            << format_number(r.residual) << ',' << format_number(r.display_idx_to_cell) << ','
            << format_number(r.display_cell_to_idx) << ',' << r.status << '\n';
    }
}

namespace {

nlohmann::json config_to_json(const PipelineConfig& cfg) {
    const auto& fit = cfg.fit;
    return {
        {"dt", cfg.dt},
        {"climatology_period", cfg.climatology_period},
        {"running_mean", cfg.running_mean},
        {"normalize", cfg.normalize},
        {"max_lag", cfg.max_lag},
        {"mask", cfg.mask},
        {"fit",
         {{"window", fit.window},
          {"weights", fit.weights},
          {"init_lags", fit.init_lags},
          {"stability_penalty", fit.stability_penalty},
          {"diffusion_penalty", fit.diffusion_penalty},
          {"max_colored_starts", fit.max_colored_starts},
          {"optimizer",
           {{"max_iters", fit.optimizer.max_iters},
            {"simplex_scale", fit.optimizer.simplex_scale},
            {"restarts", fit.optimizer.restarts},
            {"tol", fit.optimizer.tol},
            {"seed", fit.optimizer.seed}}}}},
    };
}

}  // namespace

std::string config_json(const PipelineConfig& cfg) { return config_to_json(cfg).dump(2); }

std::string results_json(const GridScanResult& result) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : result.records) {
        records.push_back({
            {"cell_id", r.cell.id},
            {"lon", number_or_null(r.cell.lon)},
            {"lat", number_or_null(r.cell.lat)},
            {"method", r.method},
            {"T_idx_to_cell", number_or_null(r.T_idx_to_cell)},
            {"T_cell_to_idx", number_or_null(r.T_cell_to_idx)},
            {"tau", number_or_null(r.tau)},
            {"residual", number_or_null(r.residual)},
            {"display_T_idx_to_cell", number_or_null(r.display_idx_to_cell)},
            {"display_T_cell_to_idx", number_or_null(r.display_cell_to_idx)},
            {"status", r.status},
        });
    }
    const nlohmann::json doc = {
        {"units", "nats/month"},
        {"config", config_to_json(result.config)},
        {"cells", result.cells},
        {"failed_cells", result.failed_cells},
        {"records", records},
    };
    return doc.dump(2);
}

namespace {

struct Layout {
    std::vector<std::pair<double, double>> xy;
    double cell_w = 1.0;
    double cell_h = 1.0;
    double width = 1.0;
    double height = 1.0;
};

// Cells with coordinates go on a lon/lat lattice; otherwise a square grid in
// cell order.
Layout layout_cells(const std::vector<const GridScanRecord*>& recs) {
    Layout l;
    const bool geo = std::all_of(recs.begin(), recs.end(), [](const GridScanRecord* r) {
        return std::isfinite(r->cell.lon) && std::isfinite(r->cell.lat);
    });
    constexpr double kPx = 12.0;
    if (geo && !recs.empty()) {
        std::set<double> lons;
        std::set<double> lats;
        for (const auto* r : recs) {
            lons.insert(r->cell.lon);
            lats.insert(r->cell.lat);
        }
        const auto spacing = [](const std::set<double>& v) {
            double best = 1.0;
            bool found = false;
            for (auto it = v.begin(), nx = std::next(v.begin()); nx != v.end(); ++it, ++nx) {
                const double d = *nx - *it;
                if (!found || d < best) {
                    best = d;
                    found = true;
                }
            }
            return best;
        };
        const double dlon = spacing(lons);
        const double dlat = spacing(lats);
        const double lon0 = *lons.begin();
        const double lat1 = *lats.rbegin();
        l.cell_w = kPx;
        l.cell_h = kPx;
        for (const auto* r : recs) {
            l.xy.emplace_back((r->cell.lon - lon0) / dlon * kPx, (lat1 - r->cell.lat) / dlat * kPx);
        }
        l.width = ((*lons.rbegin() - lon0) / dlon + 1.0) * kPx;
        l.height = ((lat1 - *lats.begin()) / dlat + 1.0) * kPx;
    } else {
        const auto cols = static_cast<std::size_t>(
            std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(recs.size(), 1)))));
        l.cell_w = kPx;
        l.cell_h = kPx;
        for (std::size_t i = 0; i < recs.size(); ++i) {
            l.xy.emplace_back(static_cast<double>(i % cols) * kPx,
                              static_cast<double>(i / cols) * kPx);
        }
        l.width = static_cast<double>(cols) * kPx;
        l.height = std::ceil(static_cast<double>(recs.size()) / static_cast<double>(cols)) * kPx;
    }
    return l;
}

std::string diverging_color(double v, double limit) {
    if (!std::isfinite(v) || !(limit > 0.0)) {
        return "#bbbbbb";
    }
    const double t = std::clamp(v / limit, -1.0, 1.0);
    // blue (33,102,172) -> white -> red (178,24,43)
    const auto mix = [](double a, double b, double f) {
        return static_cast<int>(std::lround(a + (b - a) * f));
    };
    int r = 0;
    int g = 0;
    int b = 0;
    if (t < 0.0) {
        r = mix(255, 33, -t);
        g = mix(255, 102, -t);
        b = mix(255, 172, -t);
    } else {
        r = mix(255, 178, t);
        g = mix(255, 24, t);
        b = mix(255, 43, t);
    }
    char buf[8];
    std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
    return buf;
}

std::string render_cells(const std::vector<const GridScanRecord*>& recs,
                         const std::vector<double>& values, double limit, bool diverging,
                         const std::string& title) {
    const Layout l = layout_cells(recs);
    std::ostringstream svg;
    const double margin = 20.0;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << l.width + 2 * margin
        << "\" height=\"" << l.height + 2 * margin + 10 << "\">\n";
    svg << "<text x=\"" << margin << "\" y=\"14\" font-size=\"12\">" << title << "</text>\n";
    for (std::size_t i = 0; i < recs.size(); ++i) {
        const double v = values[i];
        std::string color;
        if (diverging) {
            color = diverging_color(v, limit);
        } else {
            const double t = std::isfinite(v) && limit > 0.0 ? std::clamp(v / limit, 0.0, 1.0) : 0.0;
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - t)));
            char buf[8];
            std::snprintf(buf, sizeof buf, "#ff%02x%02x", shade, shade);
            color = std::isfinite(v) ? buf : "#bbbbbb";
        }
        svg << "<rect x=\"" << margin + l.xy[i].first << "\" y=\"" << margin + 10 + l.xy[i].second
            << "\" width=\"" << l.cell_w << "\" height=\"" << l.cell_h << "\" fill=\"" << color
            << "\"><title>" << recs[i]->cell.id << ": " << format_number(v)
            << "</title></rect>\n";
    }
    svg << "</svg>\n";
    return svg.str();
}

}  // namespace

std::string render_svg(const GridScanResult& result, const std::string& method,
                       bool idx_to_cell) {
    std::vector<const GridScanRecord*> recs;
    std::vector<double> values;
    double max_abs = 0.0;
    for (const auto& r : result.records) {
        if (r.method != method) {
            continue;
        }
        recs.push_back(&r);
        const double v = idx_to_cell ? r.display_idx_to_cell : r.display_cell_to_idx;
        values.push_back(v);
        if (std::isfinite(v)) {
            max_abs = std::max(max_abs, std::abs(v));
        }
    }
    const double limit = result.config.mask > 0.0 ? result.config.mask : max_abs;
    const std::string title = method + (idx_to_cell ? ": index to cell" : ": cell to index") +
                              " (nats/month)";
    return render_cells(recs, values, limit, true, title);
}

std::string render_tau_svg(const GridScanResult& result) {
    std::vector<const GridScanRecord*> recs;
    std::vector<double> values;
    double max_tau = 0.0;
    for (const auto& r : result.records) {
        if (r.method != "colored") {
            continue;
        }
        recs.push_back(&r);
        values.push_back(r.tau);
        if (std::isfinite(r.tau)) {
            max_tau = std::max(max_tau, r.tau);
        }
    }
    return render_cells(recs, values, max_tau, false, "noise correlation time tau (months)");
}

CorrelationPanels correlation_panels(const LaggedCorrelation& k,
                                     const ForwardDiffCovariances& diff, const FitConfig& fit) {
    CorrelationPanels panels;
    panels.white = fit_white(k, fit);
    panels.colored = fit_colored(k, fit, &panels.white);
    panels.liang_A = liang_dynamics(diff);

    const Index max_lag = k.max_lag();
    const LaggedCorrelation kw = white_correlation(panels.white.A, k.cov, k.dt, max_lag);
    const LaggedCorrelation kc = colored_correlation(panels.colored.A, panels.colored.tau,
                                                     panels.colored.Qc, k.cov, k.dt, max_lag);
    // The forward-difference dynamics need not be stable, so K_L skips the
    // stability check of white_correlation.
    const Matrix liang_step = expm(panels.liang_A, k.dt);
    Matrix kl = k.cov;
    const Index n = k.variables();
    for (Index s = 0; s <= max_lag; ++s) {
        if (s > 0) {
            kl = liang_step * kl;
        }
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                PanelRow row;
                row.s = static_cast<double>(s) * k.dt;
                row.i = i;
                row.j = j;
                row.observed = k.at(s)(i, j);
                row.white = kw.at(s)(i, j);
                row.colored = kc.at(s)(i, j);
                row.liang = kl(i, j);
                panels.rows.push_back(row);
            }
        }
    }
    return panels;
}

CorrelationPanels export_correlation_panels(const TimeSeriesMatrix& x,
                                            const PipelineConfig& cfg) {
    const TimeSeriesMatrix y = preprocess(x, cfg);
    const LaggedCorrelation k = lagged_correlation(y, pipeline_lags(cfg));
    return correlation_panels(k, forward_diff_covariances(y), cfg.fit);
}

double window_rms(const CorrelationPanels& panels, PanelColumn column, double max_s) {
    double sum = 0.0;
    std::size_t count = 0;
    for (const auto& row : panels.rows) {
        if (row.s > max_s * (1.0 + 1e-12)) {
            continue;
        }
        const double model = column == PanelColumn::white     ? row.white
                             : column == PanelColumn::colored ? row.colored
                                                              : row.liang;
        sum += (model - row.observed) * (model - row.observed);
        ++count;
    }
    if (count == 0) {
        throw Error(ErrorCode::invalid_argument, "window_rms: no lags in range");
    }
    return std::sqrt(sum / static_cast<double>(count));
}

void write_panels_csv(std::ostream& out, const CorrelationPanels& panels) {
    out << "s,i,j,observed,white,colored,liang\n";
    for (const auto& r : panels.rows) {
        out << format_number(r.s) << ',' << r.i + 1 << ',' << r.j + 1 << ','
            << format_number(r.observed) << ',' << format_number(r.white) << ','
            << format_number(r.colored) << ',' << format_number(r.liang) << '\n';
    }
}

}  // namespace limflow
