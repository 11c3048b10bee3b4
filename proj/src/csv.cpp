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

#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

namespace limflow {

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

}  // namespace

std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    std::istringstream stream(line);
    while (std::getline(stream, field, ',')) {
        fields.push_back(trim(field));
    }
    if (!line.empty() && line.back() == ',') {
        fields.emplace_back();
    }
    return fields;
}

double parse_double(const std::string& field, const std::string& context) {
    double value = 0.0;
    const char* begin = field.data();
    const char* end = begin + field.size();
    if (!field.empty() && *begin == '+') {
        ++begin;
    }
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (field.empty() || ec != std::errc() || ptr != end || !std::isfinite(value)) {
        throw Error(ErrorCode::parse_error, context + ": cannot parse '" + field + "' as a number");
    }
    return value;
}

CsvSeries read_series_csv(std::istream& in, const std::string& source) {
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) {
        throw Error(ErrorCode::parse_error, source + ": empty file");
    }
    auto header = split_csv_row(line);
    if (header.size() < 2 || header.front() != "time") {
        throw Error(ErrorCode::parse_error,
                    source + ":" + std::to_string(line_no) +
                        ": header must be 'time,<var>,...' with at least one variable");
    }

    CsvSeries out;
    out.names.assign(header.begin() + 1, header.end());
    const std::size_t width = header.size();
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        const auto fields = split_csv_row(line);
        if (fields.size() != width) {
            throw Error(ErrorCode::parse_error,
                        source + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(width) + " columns, got " +
                            std::to_string(fields.size()));
        }
        std::vector<double> row(width);
        for (std::size_t c = 0; c < width; ++c) {
            row[c] = parse_double(fields[c], source + ":" + std::to_string(line_no) +
                                                 ": column '" + header[c] + "'");
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw Error(ErrorCode::parse_error, source + ": no data rows");
    }

    const Index n = static_cast<Index>(width - 1);
    const Index len = static_cast<Index>(rows.size());
    out.data.resize(n, len);
    out.time.reserve(rows.size());
    for (Index t = 0; t < len; ++t) {
        const auto& row = rows[static_cast<std::size_t>(t)];
        out.time.push_back(row[0]);
        for (Index i = 0; i < n; ++i) {
            out.data(i, t) = row[static_cast<std::size_t>(i) + 1];
        }
    }
    return out;
}

CsvSeries read_series_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::io_error, "cannot open '" + path + "'");
    }
    return read_series_csv(in, path);
}

TimeSeriesMatrix to_time_series(const CsvSeries& csv, double dt, int t0_phase) {
    TimeSeriesMatrix x;
    x.data = csv.data;
    x.dt = dt;
    x.t0_phase = t0_phase;
    if (!(dt > 0.0)) {
        if (csv.time.size() < 2 || !(csv.time[1] > csv.time[0])) {
            throw Error(ErrorCode::invalid_argument,
                        "cannot infer dt from the time column; pass it explicitly");
        }
        x.dt = csv.time[1] - csv.time[0];
    }
    return x;
}

void write_series_csv(std::ostream& out, const std::vector<std::string>& names,
                      const TimeSeriesMatrix& x, double t0) {
    if (static_cast<Index>(names.size()) != x.variables()) {
        throw Error(ErrorCode::invalid_argument, "write_series_csv: name count mismatch");
    }
    out << "time";
    for (const auto& name : names) {
        out << ',' << name;
    }
    out << '\n';
    out << std::setprecision(17);
    for (Index t = 0; t < x.length(); ++t) {
        out << t0 + static_cast<double>(t) * x.dt;
        for (Index i = 0; i < x.variables(); ++i) {
            out << ',' << x.data(i, t);
        }
        out << '\n';
    }
}

void write_series_csv_file(const std::string& path, const std::vector<std::string>& names,
                           const TimeSeriesMatrix& x, double t0) {
    std::ofstream out(path);
    if (!out) {
        throw Error(ErrorCode::io_error, "cannot write '" + path + "'");
    }
    write_series_csv(out, names, x, t0);
}

}  // namespace limflow
