/*
   Copyright 2026 The edf Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#pragma once

// Tables of experiment rows as CSV / JSON, heatmap SVG, and the small text
// formats accepted on the command line (fitter specs, designs, point lists).

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "edf/errors.hpp"
#include "edf/experiments.hpp"
#include "edf/linalg.hpp"

namespace edf {

/// Numeric table; an empty optional is a missing cell.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::optional<double>>> cells;

    std::size_t column_index(std::string_view name) const
    {
        const auto it = std::find(columns.begin(), columns.end(), name);
        if (it == columns.end()) {
            throw InvalidArgument("table has no column '" + std::string(name) + "'");
        }
        return static_cast<std::size_t>(it - columns.begin());
    }

    std::optional<double> at(std::size_t row, std::string_view name) const { return cells.at(row).at(column_index(name)); }
};

/// Column layout: sweep parameters, df, se, optimism pair (if any row has
/// one), oracle, z_vs_oracle, extras, wallclock_s. With zero_wallclock the
/// timing column is written as 0 so reruns compare byte for byte.
inline Table to_table(const std::vector<ExperimentRow>& rows, bool zero_wallclock = false)
{
    Table table;
    std::vector<std::string> point_names;
    std::vector<std::string> extra_names;
    bool any_opt = false;
    auto add_unique = [](std::vector<std::string>& names, const std::string& name) {
        if (std::find(names.begin(), names.end(), name) == names.end()) {
            names.push_back(name);
        }
    };
    for (const ExperimentRow& row : rows) {
        for (const auto& [name, v] : row.point) add_unique(point_names, name);
        for (const auto& [name, v] : row.extras) add_unique(extra_names, name);
        any_opt = any_opt || row.df_opt.has_value();
    }
    table.columns = point_names;
    table.columns.insert(table.columns.end(), {"df", "se"});
    if (any_opt) {
        table.columns.insert(table.columns.end(), {"df_opt", "se_opt"});
    }
    table.columns.insert(table.columns.end(), {"replicates", "oracle", "z_vs_oracle"});
    table.columns.insert(table.columns.end(), extra_names.begin(), extra_names.end());
    table.columns.push_back("wallclock_s");

    auto lookup = [](const NamedValues& values, const std::string& name) -> std::optional<double> {
        for (const auto& [key, v] : values) {
            if (key == name) {
                return std::isnan(v) ? std::nullopt : std::optional<double>(v);
            }
        }
        return std::nullopt;
    };
    for (const ExperimentRow& row : rows) {
        std::vector<std::optional<double>> line;
        for (const auto& name : point_names) line.push_back(lookup(row.point, name));
        line.emplace_back(row.df.value);
        line.emplace_back(row.df.std_error);
        if (any_opt) {
            line.push_back(row.df_opt ? std::optional<double>(row.df_opt->value) : std::nullopt);
            line.push_back(row.df_opt ? std::optional<double>(row.df_opt->std_error) : std::nullopt);
        }
        line.emplace_back(static_cast<double>(row.df.replicates));
        line.push_back(row.oracle);
        line.push_back(row.z_vs_oracle());
        for (const auto& name : extra_names) line.push_back(lookup(row.extras, name));
        line.emplace_back(zero_wallclock ? 0.0 : row.wallclock);
        table.cells.push_back(std::move(line));
    }
    return table;
}

/// 17 significant digits: parsing the text recovers the double exactly.
inline std::string format_number(double v)
{
    char buffer[40];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

inline std::string to_csv(const Table& table)
{
    std::string out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out += (c ? "," : "") + table.columns[c];
    }
    out += '\n';
    for (const auto& line : table.cells) {
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (c) out += ',';
            if (line[c]) out += format_number(*line[c]);
        }
        out += '\n';
    }
    return out;
}

namespace detail {

inline std::vector<std::string> split(std::string_view text, char sep)
{
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = text.find(sep, start);
        parts.emplace_back(text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return parts;
}

inline std::string trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline double parse_double(const std::string& text, std::string_view what)
{
    const std::string t = trim(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(t, &used);
    } catch (const std::exception&) {
        throw InvalidArgument(std::string(what) + ": '" + t + "' is not a number");
    }
    if (used != t.size()) {
        throw InvalidArgument(std::string(what) + ": '" + t + "' is not a number");
    }
    return v;
}

inline std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "'");
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

} // namespace detail

/// Reads what to_csv writes: a header line, then numeric or empty cells.
inline Table parse_csv(std::string_view text)
{
    Table table;
    std::istringstream in{std::string(text)};
    std::string line;
    if (!std::getline(in, line)) {
        throw InvalidArgument("CSV has no header");
    }
    for (const auto& name : detail::split(line, ',')) {
        table.columns.push_back(detail::trim(name));
    }
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto parts = detail::split(line, ',');
        if (parts.size() != table.columns.size()) {
            throw InvalidArgument("CSV row has " + std::to_string(parts.size()) + " cells, header has "
                                  + std::to_string(table.columns.size()));
        }
        std::vector<std::optional<double>> row;
        for (const auto& cell : parts) {
            if (detail::trim(cell).empty()) {
                row.emplace_back();
            } else {
                row.emplace_back(detail::parse_double(cell, "CSV cell"));
            }
        }
        table.cells.push_back(std::move(row));
    }
    return table;
}

inline Table read_csv_file(const std::filesystem::path& path)
{
    return parse_csv(detail::read_file(path));
}

struct RunMetadata {
    std::string command;
    std::uint64_t seed = 0;
    std::size_t replicates = 0;
    std::string version;
    std::optional<std::string> timestamp;
    std::vector<std::pair<std::string, std::string>> parameters;
};

/// UTC, second resolution, e.g. 2026-01-31T12:00:00Z.
inline std::string iso8601_now()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buffer[32];
    std::strftime(buffer, sizeof buffer, "%Y-%m-%dT%H:%M:%SZ", &utc);
    return buffer;
}

inline std::string to_json(const Table& table, const RunMetadata& meta)
{
    using nlohmann::ordered_json;
    ordered_json doc;
    ordered_json m;
    m["command"] = meta.command;
    m["seed"] = meta.seed;
    m["replicates"] = meta.replicates;
    m["version"] = meta.version;
    if (meta.timestamp) {
        m["timestamp"] = *meta.timestamp;
    }
    ordered_json params = ordered_json::object();
    for (const auto& [key, value] : meta.parameters) {
        params[key] = value;
    }
    m["parameters"] = params;
    doc["metadata"] = m;
    doc["columns"] = table.columns;
    ordered_json rows = ordered_json::array();
    for (const auto& line : table.cells) {
        ordered_json row = ordered_json::object();
        for (std::size_t c = 0; c < line.size(); ++c) {
            if (line[c] && std::isfinite(*line[c])) {
                row[table.columns[c]] = *line[c];
            } else {
                row[table.columns[c]] = nullptr;
            }
        }
        rows.push_back(std::move(row));
    }
    doc["rows"] = rows;
    return doc.dump(2) + "\n";
}

/// Writes through a sibling temporary file and renames it into place, so a
/// failed run never leaves a partial file at `path`.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content)
{
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) {
            throw Error("cannot write '" + path.string() + "'");
        }
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ignored;
            std::filesystem::remove(tmp, ignored);
            throw Error("write to '" + path.string() + "' failed");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw Error("cannot move output into '" + path.string() + "'");
    }
}

// ---------------------------------------------------------------- SVG

/// Linear map of value onto a blue-teal-yellow-red ramp; a degenerate range
/// maps everything to the middle color.
inline std::string color_for(double value, double lo, double hi)
{
    static constexpr double stops[][3] = {
        {49, 54, 149}, {69, 117, 180}, {116, 173, 209}, {171, 217, 233}, {254, 224, 144}, {253, 174, 97},
        {244, 109, 67}, {215, 48, 39}, {165, 0, 38}};
    constexpr int last = static_cast<int>(std::size(stops)) - 1;
    double t = hi > lo ? (value - lo) / (hi - lo) : 0.5;
    t = std::clamp(t, 0.0, 1.0);
    const double pos = t * last;
    const int i = std::min(static_cast<int>(pos), last - 1);
    const double f = pos - i;
    char buffer[8];
    const auto channel = [&](int c) {
        return static_cast<int>(std::lround(stops[i][c] + f * (stops[i + 1][c] - stops[i][c])));
    };
    std::snprintf(buffer, sizeof buffer, "#%02x%02x%02x", channel(0), channel(1), channel(2));
    return buffer;
}

inline std::string render_heatmap_svg(const std::vector<ExperimentRow>& rows)
{
    if (rows.empty()) {
        throw IncompleteGrid("no heatmap rows");
    }
    std::set<double> xs;
    std::set<double> ys;
    std::map<std::pair<double, double>, double> cells;
    for (const ExperimentRow& row : rows) {
        const double a = row.value("mu1");
        const double b = row.value("mu2");
        xs.insert(a);
        ys.insert(b);
        if (!cells.emplace(std::make_pair(a, b), row.df.value).second) {
            throw IncompleteGrid("duplicate heatmap cell");
        }
    }
    if (cells.size() != xs.size() * ys.size()) {
        throw IncompleteGrid("heatmap rows do not form a rectangular grid");
    }
    double lo = cells.begin()->second;
    double hi = lo;
    for (const auto& [key, v] : cells) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }

    const double cell = 12.0;
    const double left = 60.0;
    const double top = 20.0;
    const double width = cell * static_cast<double>(xs.size());
    const double height = cell * static_cast<double>(ys.size());
    const double legend_x = left + width + 30.0;
    const double total_w = legend_x + 90.0;
    const double total_h = top + height + 50.0;
    const std::vector<double> xv(xs.begin(), xs.end());
    const std::vector<double> yv(ys.begin(), ys.end());
    auto num = [](double v) {
        char buffer[32];
        std::snprintf(buffer, sizeof buffer, "%.4g", v);
        return std::string(buffer);
    };

    std::ostringstream svg;
    svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << total_w << "\" height=\""
        << total_h << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
        << "<title>DF heatmap</title>\n<g id=\"cells\">\n";
    for (std::size_t i = 0; i < xv.size(); ++i) {
        for (std::size_t j = 0; j < yv.size(); ++j) {
            const double v = cells.at({xv[i], yv[j]});
            const double x = left + cell * static_cast<double>(i);
            const double y = top + height - cell * static_cast<double>(j + 1);
            svg << "<rect class=\"cell\" x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
                << cell << "\" fill=\"" << color_for(v, lo, hi) << "\" data-mu1=\"" << format_number(xv[i])
                << "\" data-mu2=\"" << format_number(yv[j]) << "\" data-df=\"" << format_number(v) << "\"/>\n";
        }
    }
    svg << "</g>\n";
    // axes: first, middle and last coordinate labels
    const std::size_t xl[] = {0, xv.size() / 2, xv.size() - 1};
    const std::size_t yl[] = {0, yv.size() / 2, yv.size() - 1};
    for (std::size_t i : xl) {
        svg << "<text class=\"tick\" x=\"" << left + cell * (static_cast<double>(i) + 0.5) << "\" y=\""
            << top + height + 14 << "\" text-anchor=\"middle\">" << num(xv[i]) << "</text>\n";
    }
    for (std::size_t j : yl) {
        svg << "<text class=\"tick\" x=\"" << left - 4 << "\" y=\""
            << top + height - cell * (static_cast<double>(j) + 0.5) + 4 << "\" text-anchor=\"end\">" << num(yv[j])
            << "</text>\n";
    }
    svg << "<text class=\"axis-label\" x=\"" << left + width / 2 << "\" y=\"" << top + height + 34
        << "\" text-anchor=\"middle\">\xCE\xBC\xE2\x82\x81</text>\n"
        << "<text class=\"axis-label\" x=\"" << 16 << "\" y=\"" << top + height / 2
        << "\" text-anchor=\"middle\">\xCE\xBC\xE2\x82\x82</text>\n";

    // legend: vertical ramp with five ticks
    const int steps = 50;
    const double ramp_h = height;
    svg << "<g id=\"legend\">\n";
    for (int s = 0; s < steps; ++s) {
        const double t0 = static_cast<double>(s) / steps;
        const double v = lo + (hi - lo) * (t0 + 0.5 / steps);
        svg << "<rect class=\"legend-step\" x=\"" << legend_x << "\" y=\"" << top + ramp_h * (1.0 - t0 - 1.0 / steps)
            << "\" width=\"16\" height=\"" << ramp_h / steps << "\" fill=\"" << color_for(v, lo, hi) << "\"/>\n";
    }
    for (int t = 0; t <= 4; ++t) {
        const double frac = t / 4.0;
        const double v = lo + (hi - lo) * frac;
        const double y = top + ramp_h * (1.0 - frac);
        svg << "<line x1=\"" << legend_x + 16 << "\" x2=\"" << legend_x + 20 << "\" y1=\"" << y << "\" y2=\"" << y
            << "\" stroke=\"black\"/>\n"
            << "<text class=\"legend-tick\" data-value=\"" << format_number(v) << "\" x=\"" << legend_x + 23
            << "\" y=\"" << y + 4 << "\">" << num(v) << "</text>\n";
    }
    svg << "<text x=\"" << legend_x << "\" y=\"" << top - 6 << "\">DF</text>\n</g>\n</svg>\n";
    return svg.str();
}

// ------------------------------------------------------ command-line formats

/// Comma-separated list of reals.
inline std::vector<double> parse_number_list(std::string_view text, char sep = ',')
{
    std::vector<double> values;
    for (const auto& part : detail::split(text, sep)) {
        values.push_back(detail::parse_double(part, "number list"));
    }
    return values;
}

/// `kind:key=value,key=value`, e.g. `ridge:lambda=0.5` or `bsr:k=3`.
struct FitterSpec {
    std::string kind;
    std::map<std::string, std::string> params;

    bool has(const std::string& key) const { return params.count(key) > 0; }

    double number(const std::string& key) const
    {
        const auto it = params.find(key);
        if (it == params.end()) {
            throw InvalidArgument("fitter '" + kind + "' needs " + key + "=");
        }
        return detail::parse_double(it->second, key);
    }

    std::size_t count(const std::string& key) const
    {
        const double v = number(key);
        if (v < 0.0 || v != std::floor(v) || v > 1e9) {
            throw InvalidArgument(key + " must be a nonnegative integer");
        }
        return static_cast<std::size_t>(v);
    }
};

inline FitterSpec parse_fitter_spec(std::string_view text)
{
    FitterSpec spec;
    const auto colon = text.find(':');
    spec.kind = detail::trim(text.substr(0, colon));
    static const std::set<std::string> kinds{"ols", "ridge", "bsr", "fsr", "axis", "points"};
    if (!kinds.count(spec.kind)) {
        throw InvalidArgument("unknown fitter '" + spec.kind + "' (expected ols, ridge, bsr, fsr, axis, points)");
    }
    if (colon == std::string_view::npos) {
        return spec;
    }
    for (const auto& item : detail::split(text.substr(colon + 1), ',')) {
        if (detail::trim(item).empty()) {
            continue;
        }
        const auto eq = item.find('=');
        if (eq == std::string::npos) {
            throw InvalidArgument("fitter parameter '" + item + "' is not key=value");
        }
        const std::string key = detail::trim(std::string_view(item).substr(0, eq));
        if (!spec.params.emplace(key, detail::trim(std::string_view(item).substr(eq + 1))).second) {
            throw InvalidArgument("fitter parameter '" + key + "' given twice");
        }
    }
    static const std::map<std::string, std::set<std::string>> allowed{
        {"ols", {}}, {"ridge", {"lambda"}}, {"bsr", {"k"}}, {"fsr", {"k"}}, {"axis", {"k"}}, {"points", {"file", "at"}}};
    for (const auto& [key, value] : spec.params) {
        if (!allowed.at(spec.kind).count(key)) {
            throw InvalidArgument("fitter '" + spec.kind + "' has no parameter '" + key + "'");
        }
    }
    return spec;
}

/// Dense matrix from CSV text: no header, one row per line, commas between
/// entries.
inline Matrix parse_matrix_csv(std::string_view text)
{
    std::vector<std::vector<double>> rows;
    std::istringstream in{std::string(text)};
    std::string line;
    while (std::getline(in, line)) {
        if (detail::trim(line).empty()) {
            continue;
        }
        rows.push_back(parse_number_list(line));
        if (rows.back().size() != rows.front().size()) {
            throw InvalidArgument("matrix CSV rows have different lengths");
        }
    }
    if (rows.empty()) {
        throw InvalidArgument("matrix CSV is empty");
    }
    Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return m;
}

/// `gaussian:n=50,p=15,seed=S` or a path to a headerless CSV.
inline DesignMatrix load_design(std::string_view source)
{
    constexpr std::string_view prefix = "gaussian:";
    if (source.substr(0, prefix.size()) == prefix) {
        std::map<std::string, std::string> params;
        for (const auto& item : detail::split(source.substr(prefix.size()), ',')) {
            const auto eq = item.find('=');
            if (eq == std::string::npos) {
                throw InvalidArgument("design parameter '" + item + "' is not key=value");
            }
            params[detail::trim(std::string_view(item).substr(0, eq))] =
                detail::trim(std::string_view(item).substr(eq + 1));
        }
        auto get = [&](const std::string& key, double fallback) {
            const auto it = params.find(key);
            return it == params.end() ? fallback : detail::parse_double(it->second, key);
        };
        for (const auto& [key, value] : params) {
            if (key != "n" && key != "p" && key != "seed") {
                throw InvalidArgument("gaussian design has no parameter '" + key + "'");
            }
        }
        const double n = get("n", 50);
        const double p = get("p", 15);
        const double seed = get("seed", 1);
        if (n < 1 || p < 1 || n != std::floor(n) || p != std::floor(p) || seed < 0 || seed != std::floor(seed)) {
            throw InvalidArgument("gaussian design needs integer n, p >= 1 and seed >= 0");
        }
        return gaussian_design(static_cast<std::size_t>(n), static_cast<std::size_t>(p),
                               static_cast<std::uint64_t>(seed));
    }
    return DesignMatrix(parse_matrix_csv(detail::read_file(std::string(source))));
}

/// Point list for the points fitter: `at=` inline (points separated by ';',
/// coordinates by '/') or `file=` CSV with one point per row.
inline std::vector<Vector> load_points(const FitterSpec& spec)
{
    std::vector<Vector> points;
    if (spec.has("file") == spec.has("at")) {
        throw InvalidArgument("points fitter needs exactly one of file= or at=");
    }
    if (spec.has("file")) {
        const Matrix m = parse_matrix_csv(detail::read_file(spec.params.at("file")));
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            points.emplace_back(m.row(i).transpose());
        }
        return points;
    }
    for (const auto& item : detail::split(spec.params.at("at"), ';')) {
        const std::vector<double> coords = parse_number_list(item, '/');
        points.emplace_back(Eigen::Map<const Vector>(coords.data(), static_cast<Eigen::Index>(coords.size())));
    }
    return points;
}

} // namespace edf
