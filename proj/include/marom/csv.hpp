#pragma once

#include <Eigen/Dense>

#include <filesystem>
#include <string>
#include <string_view>

namespace marom::csv {

/// Parses a headerless numeric CSV ('.' decimal, ',' separator). Malformed
/// or non-finite cells raise DataError naming the 1-based row and column.
Eigen::MatrixXd parse_matrix(std::string_view text, const std::string& source = "<memory>");
Eigen::MatrixXd read_matrix(const std::filesystem::path& path);

/// 17 significant digits, so values survive a write/read cycle unchanged.
std::string format_matrix(const Eigen::MatrixXd& m);
void write_matrix(const std::filesystem::path& path, const Eigen::MatrixXd& m);

std::string format_double(double v);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace marom::csv
