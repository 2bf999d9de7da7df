#pragma once

#include <roughpath/errors.hpp>
#include <roughpath/grid.hpp>
#include <roughpath/rde.hpp>
#include <roughpath/rough_path.hpp>
#include <roughpath/tensor.hpp>

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#ifndef ROUGHPATH_VERSION
#define ROUGHPATH_VERSION "0.1.0"
#endif

namespace roughpath {

using json = nlohmann::json;

inline constexpr std::string_view version_string = ROUGHPATH_VERSION;

/// Shortest text that reads back to the same double ("%.17g").
inline std::string format_double(double x) {
    char buf[32];
    const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf, static_cast<std::size_t>(n));
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t c = line.find(',', start);
        out.push_back(trim(line.substr(start, c == std::string_view::npos ? std::string_view::npos : c - start)));
        if (c == std::string_view::npos) break;
        start = c + 1;
    }
    return out;
}

inline double parse_field(std::string_view s, std::size_t line, std::size_t column) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (s.empty() || ec != std::errc() || ptr != end || !std::isfinite(v))
        throw DataError("CSV line " + std::to_string(line) + ", column " + std::to_string(column) + ": cannot parse '" +
                        std::string(s) + "' as a finite number");
    return v;
}

} // namespace detail

/**
 * Reads `t,x1,...,xm` with one row per grid node. Blank lines are skipped;
 * every diagnostic names the 1-based line it refers to.
 */
inline SampledPath read_path_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    std::size_t m = 0;
    bool header = false;
    std::vector<double> times, values;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string_view s = detail::trim(line);
        if (s.empty()) continue;
        const auto fields = detail::split_commas(s);
        if (!header) {
            if (fields.size() < 2 || fields[0] != "t")
                throw DataError("CSV line " + std::to_string(lineno) + ": header must read t,x1,...,xm");
            for (std::size_t c = 1; c < fields.size(); ++c)
                if (fields[c] != "x" + std::to_string(c))
                    throw DataError("CSV line " + std::to_string(lineno) + ": expected column x" + std::to_string(c) +
                                    ", found '" + std::string(fields[c]) + "'");
            m = fields.size() - 1;
            header = true;
            continue;
        }
        if (fields.size() != m + 1)
            throw DataError("CSV line " + std::to_string(lineno) + ": expected " + std::to_string(m + 1) + " fields, found " +
                            std::to_string(fields.size()));
        const double t = detail::parse_field(fields[0], lineno, 1);
        if (!times.empty() && !(t > times.back()))
            throw DataError("CSV line " + std::to_string(lineno) + ": times must be strictly increasing");
        times.push_back(t);
        for (std::size_t c = 1; c <= m; ++c) values.push_back(detail::parse_field(fields[c], lineno, c + 1));
    }
    if (!header) throw DataError("CSV: empty input, missing header");
    if (times.size() < 2) throw DataError("CSV: need at least two data rows, found " + std::to_string(times.size()));
    return SampledPath(TimeGrid(std::move(times)), m, std::move(values));
}

inline void write_path_csv(std::ostream& out, const SampledPath& p) {
    out << 't';
    for (std::size_t a = 1; a <= p.dim(); ++a) out << ",x" << a;
    out << '\n';
    for (std::size_t k = 0; k < p.nodes(); ++k) {
        out << format_double(p.grid()[k]);
        for (double v : p.value(k)) out << ',' << format_double(v);
        out << '\n';
    }
}

/// Generic table: header row then numeric rows, 17 significant digits.
inline void write_table_csv(std::ostream& out, const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& rows) {
    for (std::size_t c = 0; c < header.size(); ++c) out << (c ? "," : "") << header[c];
    out << '\n';
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
        out << '\n';
    }
}

namespace detail {

inline json mat_json(std::span<const double> flat, std::size_t rows, std::size_t cols) {
    json m = json::array();
    for (std::size_t i = 0; i < rows; ++i) m.push_back(std::vector<double>(flat.begin() + i * cols, flat.begin() + (i + 1) * cols));
    return m;
}

inline double number_at(const json& j, const std::string& where) {
    if (!j.is_number()) throw DataError("JSON: " + where + " is not a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw DataError("JSON: " + where + " is not finite");
    return v;
}

inline const json& member(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw DataError(std::string("JSON: missing field '") + key + "'");
    return j.at(key);
}

inline const json& array_of(const json& j, std::size_t n, const std::string& where) {
    if (!j.is_array() || j.size() != n)
        throw DataError("JSON: " + where + " must be an array of length " + std::to_string(n));
    return j;
}

} // namespace detail

/// {d, times[], X[][], blocks[][][]}
inline json to_json(const RoughPath& r) {
    const std::size_t d = r.dim();
    json j;
    j["d"] = d;
    j["times"] = r.grid().times();
    json x = json::array();
    for (std::size_t k = 0; k < r.nodes(); ++k) x.push_back(std::vector<double>(r.path().value(k).begin(), r.path().value(k).end()));
    j["X"] = std::move(x);
    json b = json::array();
    for (std::size_t k = 0; k < r.steps(); ++k) b.push_back(detail::mat_json(r.block_span(k), d, d));
    j["blocks"] = std::move(b);
    return j;
}

inline RoughPath rough_path_from_json(const json& j) {
    const json& dj = detail::member(j, "d");
    if (!dj.is_number_unsigned() || dj.get<std::size_t>() == 0) throw DataError("JSON: 'd' must be a positive integer");
    const std::size_t d = dj.get<std::size_t>();
    const json& tj = detail::member(j, "times");
    if (!tj.is_array() || tj.size() < 2) throw DataError("JSON: 'times' needs at least two entries");
    const std::size_t n = tj.size();
    std::vector<double> times, x, blocks;
    for (std::size_t k = 0; k < n; ++k) {
        times.push_back(detail::number_at(tj[k], "times[" + std::to_string(k) + "]"));
        if (k > 0 && !(times[k] > times[k - 1])) throw DataError("JSON: times must be strictly increasing at index " + std::to_string(k));
    }
    const json& xj = detail::array_of(detail::member(j, "X"), n, "X");
    for (std::size_t k = 0; k < n; ++k) {
        const json& row = detail::array_of(xj[k], d, "X[" + std::to_string(k) + "]");
        for (std::size_t a = 0; a < d; ++a) x.push_back(detail::number_at(row[a], "X[" + std::to_string(k) + "]"));
    }
    const json& bj = detail::array_of(detail::member(j, "blocks"), n - 1, "blocks");
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const std::string where = "blocks[" + std::to_string(k) + "]";
        const json& blk = detail::array_of(bj[k], d, where);
        for (std::size_t a = 0; a < d; ++a) {
            const json& row = detail::array_of(blk[a], d, where);
            for (std::size_t b = 0; b < d; ++b) blocks.push_back(detail::number_at(row[b], where));
        }
    }
    return RoughPath(SampledPath(TimeGrid(std::move(times)), d, std::move(x)), std::move(blocks));
}

/// {t[], Y[][], Yp[][][], residual}; Yp_k is stored as p rows of d entries.
inline json to_json(const RDESolution& s) {
    const auto& c = s.path;
    const std::size_t p = c.value_dim(), d = c.driver_dim();
    json j;
    j["t"] = c.grid().times();
    json y = json::array(), yp = json::array();
    for (std::size_t k = 0; k < c.nodes(); ++k) {
        y.push_back(std::vector<double>(c.value(k).begin(), c.value(k).end()));
        yp.push_back(detail::mat_json(c.derivative_span(k), p, d));
    }
    j["Y"] = std::move(y);
    j["Yp"] = std::move(yp);
    j["residual"] = std::isfinite(s.residual) ? json(s.residual) : json(nullptr);
    if (s.picard) {
        json r;
        r["converged"] = s.picard->converged;
        r["halvings"] = s.picard->halvings;
        r["iterations"] = s.picard->iterations;
        r["final_seminorm"] = std::isfinite(s.picard->final_seminorm) ? json(s.picard->final_seminorm) : json(nullptr);
        j["picard"] = std::move(r);
    }
    return j;
}

inline RDESolution solution_from_json(const json& j) {
    const json& tj = detail::member(j, "t");
    if (!tj.is_array() || tj.size() < 2) throw DataError("JSON: 't' needs at least two entries");
    const std::size_t n = tj.size();
    std::vector<double> times, y, yp;
    for (std::size_t k = 0; k < n; ++k) times.push_back(detail::number_at(tj[k], "t[" + std::to_string(k) + "]"));
    const json& yj = detail::array_of(detail::member(j, "Y"), n, "Y");
    const json& ypj = detail::array_of(detail::member(j, "Yp"), n, "Yp");
    if (!yj[0].is_array() || yj[0].empty()) throw DataError("JSON: Y[0] must be a non-empty array");
    const std::size_t p = yj[0].size();
    if (!ypj[0].is_array() || ypj[0].size() != p || !ypj[0][0].is_array() || ypj[0][0].empty())
        throw DataError("JSON: Yp[0] must be a p x d array");
    const std::size_t d = ypj[0][0].size();
    for (std::size_t k = 0; k < n; ++k) {
        const std::string where = "[" + std::to_string(k) + "]";
        const json& row = detail::array_of(yj[k], p, "Y" + where);
        for (std::size_t i = 0; i < p; ++i) y.push_back(detail::number_at(row[i], "Y" + where));
        const json& m = detail::array_of(ypj[k], p, "Yp" + where);
        for (std::size_t i = 0; i < p; ++i) {
            const json& r = detail::array_of(m[i], d, "Yp" + where);
            for (std::size_t b = 0; b < d; ++b) yp.push_back(detail::number_at(r[b], "Yp" + where));
        }
    }
    double residual = std::numeric_limits<double>::quiet_NaN();
    if (j.contains("residual") && !j.at("residual").is_null()) residual = detail::number_at(j.at("residual"), "residual");
    return RDESolution{ControlledPath(TimeGrid(std::move(times)), p, d, std::move(y), std::move(yp)), residual, std::nullopt};
}

/// {config, version, seed} block embedded in every CLI artifact.
inline json run_metadata(const json& config, std::uint64_t seed) {
    return json{{"config", config}, {"version", std::string(version_string)}, {"seed", seed}};
}

} // namespace roughpath
