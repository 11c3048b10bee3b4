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

#include "limflow/timeseries.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace limflow {

/// `time,var1,...,varn` with one row per sample. The time column is kept
/// for reference only; sampling is assumed uniform.
struct CsvSeries {
    std::vector<std::string> names;
    std::vector<double> time;
    /// One row per variable.
    Matrix data;
};

CsvSeries read_series_csv(std::istream& in, const std::string& source = "<stream>");
CsvSeries read_series_csv_file(const std::string& path);

/// dt is inferred from the time column when it has at least two rows.
TimeSeriesMatrix to_time_series(const CsvSeries& csv, double dt, int t0_phase = 0);

void write_series_csv(std::ostream& out, const std::vector<std::string>& names,
                      const TimeSeriesMatrix& x, double t0 = 0.0);
void write_series_csv_file(const std::string& path, const std::vector<std::string>& names,
                           const TimeSeriesMatrix& x, double t0 = 0.0);

/// Minimal row splitter shared by the other CSV readers.
std::vector<std::string> split_csv_row(const std::string& line);
double parse_double(const std::string& field, const std::string& context);

}  // namespace limflow
