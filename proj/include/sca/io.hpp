#pragma once

#include "sca/error.hpp"

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace sca {

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
    char buf[32];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw ValidationError("cannot format number");
    return std::string(buf, end);
}

/// CSV with a header row "<id_header>,<columns...>" and one row per id.
inline std::string matrix_csv(const std::vector<std::string>& ids, const std::vector<std::string>& columns,
                              const Eigen::MatrixXd& values, const std::string& id_header = "id") {
    if (static_cast<Eigen::Index>(ids.size()) != values.rows() ||
        static_cast<Eigen::Index>(columns.size()) != values.cols())
        throw ValidationError("csv shape mismatch");
    std::string out = id_header;
    for (const auto& c : columns) out += "," + c;
    out += "\n";
    for (Eigen::Index i = 0; i < values.rows(); ++i) {
        out += ids[static_cast<std::size_t>(i)];
        for (Eigen::Index j = 0; j < values.cols(); ++j) out += "," + format_double(values(i, j));
        out += "\n";
    }
    return out;
}

inline std::vector<std::string> numbered_columns(const std::string& prefix, Eigen::Index count) {
    std::vector<std::string> cols;
    for (Eigen::Index j = 1; j <= count; ++j) cols.push_back(prefix + std::to_string(j));
    return cols;
}

/// Writes via a temporary sibling file and rename, so readers never see a
/// partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot open " + tmp.string() + " for writing");
        out << contents;
        out.flush();
        if (!out) throw ValidationError("failed writing " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw ValidationError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace sca
