#pragma once

#include "design.hpp"

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace gfivs {

struct Dataset {
    Vector y;
    Matrix X;
    std::vector<std::string> names;  // response first
    int n() const noexcept { return static_cast<int>(X.rows()); }
    int p() const noexcept { return static_cast<int>(X.cols()); }
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& cell, double& out) {
    const std::string t = trim(cell);
    if (t.empty()) return false;
    const char* first = t.data();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, t.data() + t.size(), out);
    return ec == std::errc() && ptr == t.data() + t.size();
}

}  // namespace detail

/// Header row, then one row per observation: response in the first column, covariates after.
inline Dataset parse_csv(std::istream& in, const std::string& source = "<stream>") {
    std::string line;
    std::size_t lineno = 0;
    Dataset ds;
    while (std::getline(in, line)) {
        ++lineno;
        if (!detail::trim(line).empty()) break;
    }
    if (lineno == 0 || detail::trim(line).empty()) throw InputError(source + ": empty file");
    if (lineno == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        line.erase(0, 3);
    for (auto& h : detail::split_csv_line(line)) ds.names.push_back(detail::trim(h));
    const std::size_t cols = ds.names.size();
    if (cols < 2) throw InputError(source + ": need a response column and at least one covariate");

    std::vector<double> vals;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty()) continue;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != cols)
            throw InputError(source + ": row " + std::to_string(lineno) + " has " +
                             std::to_string(cells.size()) + " fields, header has " +
                             std::to_string(cols));
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!detail::parse_double(cells[c], v))
                throw InputError(source + ": row " + std::to_string(lineno) + ", column " +
                                 std::to_string(c + 1) + " (" + ds.names[c] +
                                 "): not a number: '" + cells[c] + "'");
            vals.push_back(v);
        }
        ++rows;
    }
    if (rows == 0) throw InputError(source + ": no data rows");
    ds.y.resize(static_cast<Eigen::Index>(rows));
    ds.X.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols - 1));
    for (std::size_t i = 0; i < rows; ++i) {
        ds.y(static_cast<Eigen::Index>(i)) = vals[i * cols];
        for (std::size_t c = 1; c < cols; ++c)
            ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c - 1)) = vals[i * cols + c];
    }
    return ds;
}

inline Dataset ingest_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return parse_csv(in, path.string());
}

/// Shortest representation that parses back to the same double.
inline std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

inline std::string to_csv(const Dataset& ds) {
    std::ostringstream os;
    for (std::size_t c = 0; c < ds.names.size(); ++c) os << (c ? "," : "") << ds.names[c];
    os << '\n';
    for (Eigen::Index i = 0; i < ds.X.rows(); ++i) {
        os << format_double(ds.y(i));
        for (Eigen::Index j = 0; j < ds.X.cols(); ++j) os << ',' << format_double(ds.X(i, j));
        os << '\n';
    }
    return os.str();
}

/// Write through a sibling temporary file and rename it over the target.
inline void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    namespace fs = std::filesystem;
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw InputError("cannot write " + tmp.string());
        out << contents;
        out.flush();
        if (!out) throw InputError("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw InputError("cannot rename onto " + path.string());
    }
}

}  // namespace gfivs
