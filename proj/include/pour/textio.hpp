#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace pour {

/// Writes content to path via a temp file + rename, so readers never see a
/// partial file.
void write_text_atomic(const std::string& path, const std::string& content);

std::string read_text(const std::string& path);

/// Shortest-round-trip style formatting ("%.9g" by default); used everywhere
/// so that repeated runs produce byte-identical output.
std::string fmt(double v, const char* spec = "%.9g");

/// Tab-separated numeric matrix, one row per line.
void write_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(const std::string& path);

/// Splits a line on tabs/spaces, skipping empty tokens.
std::vector<std::string> split_fields(const std::string& line);

/// All non-empty, non-comment ('#') lines of a file.
std::vector<std::string> read_data_lines(const std::string& path);

double parse_double(const std::string& s, const std::string& what);

}  // namespace pour
