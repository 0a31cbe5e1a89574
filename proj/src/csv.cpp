#include "marom/csv.hpp"

#include "marom/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace marom::csv {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::string location(const std::string& source, std::size_t row, std::size_t col) {
    return source + ": row " + std::to_string(row) + ", column " + std::to_string(col);
}

}  // namespace

Eigen::MatrixXd parse_matrix(std::string_view text, const std::string& source) {
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t width = 0;
    while (!text.empty()) {
        const auto eol = text.find('\n');
        std::string_view line = text.substr(0, eol);
        text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
        ++line_no;
        if (trim(line).empty()) continue;

        std::vector<double> row;
        std::size_t col = 0;
        while (true) {
            const auto comma = line.find(',');
            std::string_view cell = trim(line.substr(0, comma));
            ++col;
            if (cell.empty()) throw DataError("empty cell at " + location(source, line_no, col));
            if (cell.front() == '+') cell.remove_prefix(1);
            double v = 0.0;
            const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec == std::errc::result_out_of_range) {
                throw DataError("non-finite value '" + std::string(cell) + "' at " + location(source, line_no, col));
            }
            if (ec != std::errc{} || ptr != cell.data() + cell.size()) {
                throw DataError("malformed number '" + std::string(cell) + "' at " + location(source, line_no, col));
            }
            if (!std::isfinite(v)) {
                throw DataError("non-finite value '" + std::string(cell) + "' at " + location(source, line_no, col));
            }
            row.push_back(v);
            if (comma == std::string_view::npos) break;
            line = line.substr(comma + 1);
        }
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw DataError("ragged row at " + location(source, line_no, row.size()) + ": expected " +
                            std::to_string(width) + " columns, found " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }

    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < width; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return m;
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file " + path.string());
    out << text;
    if (!out) throw DataError("write failed for " + path.string());
}

Eigen::MatrixXd read_matrix(const std::filesystem::path& path) {
    return parse_matrix(read_text(path), path.string());
}

std::string format_double(double v) {
    char buf[40];
    // snprintf always formats with the "C" locale unless setlocale() is called.
    const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf, static_cast<std::size_t>(len));
}

std::string format_matrix(const Eigen::MatrixXd& m) {
    std::string out;
    out.reserve(static_cast<std::size_t>(m.size()) * 24);
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += format_double(m(i, j));
        }
        out += '\n';
    }
    return out;
}

void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m) {
    write_text(path, format_matrix(m));
}

}  // namespace marom::csv
