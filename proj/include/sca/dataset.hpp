#pragma once

#include "sca/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

namespace sca {

/// n observed objects as rows of a d-column matrix, with row ids and an
/// optional response (e.g. redshift).
struct DataSet {
    Eigen::MatrixXd points;
    std::vector<std::string> ids;
    std::optional<Eigen::VectorXd> response;
    std::vector<std::string> feature_names;

    Eigen::Index size() const { return points.rows(); }
    Eigen::Index dim() const { return points.cols(); }
};

inline std::vector<std::string> index_ids(Eigen::Index n) {
    std::vector<std::string> ids;
    ids.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) ids.push_back(std::to_string(i));
    return ids;
}

/// Checks every DataSet invariant; throws ValidationError on the first failure.
inline void validate(const DataSet& data) {
    const Eigen::Index n = data.points.rows();
    if (n < 2) throw ValidationError("dataset needs at least 2 rows, got " + std::to_string(n));
    if (data.points.cols() < 1) throw ValidationError("dataset needs at least 1 feature column");
    if (static_cast<Eigen::Index>(data.ids.size()) != n)
        throw ValidationError("dataset has " + std::to_string(data.ids.size()) + " ids for " +
                              std::to_string(n) + " rows");
    for (Eigen::Index i = 0; i < n; ++i)
        if (!data.points.row(i).allFinite())
            throw ValidationError("non-finite feature value in row " + std::to_string(i));
    std::unordered_set<std::string> seen;
    for (const auto& id : data.ids)
        if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
    if (data.response) {
        if (data.response->size() != n)
            throw ValidationError("response length " + std::to_string(data.response->size()) +
                                  " does not match " + std::to_string(n) + " rows");
        if (!data.response->allFinite()) throw ValidationError("non-finite response value");
    }
}

inline DataSet make_dataset(Eigen::MatrixXd points, std::optional<Eigen::VectorXd> response = std::nullopt) {
    DataSet data;
    data.ids = index_ids(points.rows());
    data.points = std::move(points);
    data.response = std::move(response);
    for (Eigen::Index k = 0; k < data.points.cols(); ++k) data.feature_names.push_back("x" + std::to_string(k + 1));
    validate(data);
    return data;
}

// ---------------------------------------------------------------------------
// Delimited text tables

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;

    std::optional<std::size_t> column(std::string_view name) const {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) return std::nullopt;
        return static_cast<std::size_t>(it - header.begin());
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\r' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        const auto cell = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        cells.emplace_back(delim == '\t' ? cell : trim(cell));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& c : cells)
        if (!c.empty() && c.back() == '\r') c.pop_back();
    return cells;
}

} // namespace detail

/// Parses a finite number occupying the whole cell.
inline std::optional<double> parse_number(std::string_view cell) {
    cell = detail::trim(cell);
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    const auto [end, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc() || end != cell.data() + cell.size() || !std::isfinite(value)) return std::nullopt;
    return value;
}

/// Reads a header row plus data rows. Comma-separated unless the header
/// contains a tab and no comma. Blank lines are skipped.
inline Table read_table(std::istream& in) {
    Table table;
    std::string line;
    std::size_t line_no = 0;
    char delim = ',';
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        if (!have_header) {
            if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF &&
                static_cast<unsigned char>(line[1]) == 0xBB && static_cast<unsigned char>(line[2]) == 0xBF)
                line.erase(0, 3);
            if (line.find('\t') != std::string::npos && line.find(',') == std::string::npos) delim = '\t';
            table.header = detail::split(line, delim);
            for (auto& h : table.header) h = std::string(detail::trim(h));
            have_header = true;
            continue;
        }
        auto cells = detail::split(line, delim);
        if (cells.size() != table.header.size())
            throw ValidationError("malformed row " + std::to_string(table.rows.size()) + " (line " +
                                  std::to_string(line_no) + "): expected " +
                                  std::to_string(table.header.size()) + " cells, got " +
                                  std::to_string(cells.size()));
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(line_no);
    }
    if (!have_header) throw ValidationError("input has no header row");
    return table;
}

struct LoadOptions {
    std::optional<std::string> id_column;
    std::optional<std::string> response_column;
    /// Columns that are neither features, ids nor the response.
    std::vector<std::string> ignore_columns;
};

/// Builds a DataSet from a parsed table; every remaining column is a feature.
inline DataSet dataset_from_table(const Table& table, const LoadOptions& opts = {}) {
    auto require = [&](const std::string& name, const char* role) {
        auto col = table.column(name);
        if (!col) throw ValidationError(std::string(role) + " column '" + name + "' not found in header");
        return *col;
    };
    std::optional<std::size_t> id_col, resp_col;
    if (opts.id_column) id_col = require(*opts.id_column, "id");
    if (opts.response_column) resp_col = require(*opts.response_column, "response");
    std::vector<std::size_t> features;
    for (std::size_t c = 0; c < table.header.size(); ++c) {
        if (c == id_col || c == resp_col) continue;
        if (std::find(opts.ignore_columns.begin(), opts.ignore_columns.end(), table.header[c]) !=
            opts.ignore_columns.end())
            continue;
        features.push_back(c);
    }

    const auto n = static_cast<Eigen::Index>(table.rows.size());
    if (n < 2) throw ValidationError("dataset needs at least 2 rows, got " + std::to_string(n));
    if (features.empty()) throw ValidationError("no feature columns");

    DataSet data;
    data.points.resize(n, static_cast<Eigen::Index>(features.size()));
    if (resp_col) data.response = Eigen::VectorXd(n);
    for (auto c : features) data.feature_names.push_back(table.header[c]);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& row = table.rows[static_cast<std::size_t>(i)];
        auto bad = [&](std::size_t c) {
            return ValidationError("malformed row " + std::to_string(i) + " (line " +
                                   std::to_string(table.line_numbers[static_cast<std::size_t>(i)]) +
                                   "): column '" + table.header[c] + "' has non-numeric value '" + row[c] + "'");
        };
        for (std::size_t k = 0; k < features.size(); ++k) {
            auto v = parse_number(row[features[k]]);
            if (!v) throw bad(features[k]);
            data.points(i, static_cast<Eigen::Index>(k)) = *v;
        }
        if (resp_col) {
            auto v = parse_number(row[*resp_col]);
            if (!v) throw bad(*resp_col);
            (*data.response)(i) = *v;
        }
        data.ids.push_back(id_col ? row[*id_col] : std::to_string(i));
    }
    validate(data);
    return data;
}

/// Query points: the named columns, in order, for any number of rows
/// (including zero). Used for inputs to an already fitted model.
struct QueryPoints {
    std::vector<std::string> ids;
    Eigen::MatrixXd points;
};

inline QueryPoints query_points_from_table(const Table& table, const std::vector<std::string>& columns,
                                           const std::optional<std::string>& id_column = std::nullopt) {
    std::vector<std::size_t> cols;
    for (const auto& name : columns) {
        auto c = table.column(name);
        if (!c) throw ValidationError("input is missing feature column '" + name + "'");
        cols.push_back(*c);
    }
    std::optional<std::size_t> id_col;
    if (id_column) {
        id_col = table.column(*id_column);
        if (!id_col) throw ValidationError("id column '" + *id_column + "' not found in header");
    }
    QueryPoints q;
    q.points.resize(static_cast<Eigen::Index>(table.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const auto& row = table.rows[i];
        for (std::size_t k = 0; k < cols.size(); ++k) {
            auto v = parse_number(row[cols[k]]);
            if (!v)
                throw ValidationError("malformed row " + std::to_string(i) + " (line " +
                                      std::to_string(table.line_numbers[i]) + "): column '" + table.header[cols[k]] +
                                      "' has non-numeric value '" + row[cols[k]] + "'");
            q.points(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = *v;
        }
        q.ids.push_back(id_col ? row[*id_col] : std::to_string(i));
    }
    std::unordered_set<std::string> seen;
    for (const auto& id : q.ids)
        if (!seen.insert(id).second) throw ValidationError("duplicate id '" + id + "'");
    return q;
}

inline DataSet load_dataset(std::istream& in, const LoadOptions& opts = {}) {
    return dataset_from_table(read_table(in), opts);
}

// ---------------------------------------------------------------------------
// Dissimilarities

enum class DissimilarityKind { SquaredEuclidean, Euclidean, Table };

inline std::string to_string(DissimilarityKind kind) {
    switch (kind) {
    case DissimilarityKind::SquaredEuclidean: return "sqeuclidean";
    case DissimilarityKind::Euclidean: return "euclidean";
    case DissimilarityKind::Table: return "table";
    }
    return "unknown";
}

struct Dissimilarity {
    DissimilarityKind kind = DissimilarityKind::SquaredEuclidean;
    std::optional<Eigen::MatrixXd> table;

    static Dissimilarity squared_euclidean() { return {}; }
    static Dissimilarity euclidean() { return {DissimilarityKind::Euclidean, std::nullopt}; }
    static Dissimilarity user_table(Eigen::MatrixXd t) { return {DissimilarityKind::Table, std::move(t)}; }
};

/// Dissimilarity of two feature vectors under a built-in kind. The summation
/// order is fixed so query rows reproduce training rows bit for bit.
template <typename A, typename B>
double point_dissimilarity(DissimilarityKind kind, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& y) {
    double s = 0.0;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
        const double diff = x(k) - y(k);
        s += diff * diff;
    }
    switch (kind) {
    case DissimilarityKind::SquaredEuclidean: return s;
    case DissimilarityKind::Euclidean: return std::sqrt(s);
    case DissimilarityKind::Table: break;
    }
    throw ValidationError("user-supplied dissimilarity tables cannot be evaluated at new points");
}

/// n×n dissimilarity matrix: symmetric, nonnegative, zero diagonal.
inline Eigen::MatrixXd pairwise_dissimilarity(const DataSet& data, const Dissimilarity& diss) {
    const Eigen::Index n = data.size();
    if (diss.kind == DissimilarityKind::Table) {
        if (!diss.table) throw ValidationError("table dissimilarity without a table");
        const Eigen::MatrixXd& t = *diss.table;
        if (t.rows() != n || t.cols() != n)
            throw ValidationError("dissimilarity table is " + std::to_string(t.rows()) + "x" +
                                  std::to_string(t.cols()) + ", dataset has " + std::to_string(n) + " rows");
        if (!t.allFinite()) throw ValidationError("dissimilarity table has non-finite entries");
        Eigen::MatrixXd out(n, n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if (std::abs(t(i, i)) > 1e-12) throw ValidationError("dissimilarity table has nonzero diagonal at " + std::to_string(i));
            out(i, i) = 0.0;
            for (Eigen::Index j = i + 1; j < n; ++j) {
                const double a = t(i, j), b = t(j, i);
                if (a < 0.0 || b < 0.0)
                    throw ValidationError("dissimilarity table has negative entry at (" + std::to_string(i) + "," +
                                          std::to_string(j) + ")");
                if (std::abs(a - b) > 1e-12 * std::max(1.0, std::max(a, b)))
                    throw ValidationError("dissimilarity table is not symmetric at (" + std::to_string(i) + "," +
                                          std::to_string(j) + ")");
                out(i, j) = out(j, i) = 0.5 * (a + b);
            }
        }
        return out;
    }
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            out(i, j) = out(j, i) = point_dissimilarity(diss.kind, data.points.row(i), data.points.row(j));
    return out;
}

} // namespace sca
