#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "stmrf/chain.hpp"

namespace stmrf {

/// 17 significant digits, '.' decimal point, locale independent.
std::string format_double(double v);
double parse_double(std::string_view text);

/// Rows of comma-separated values, no header.
void write_matrix_csv(const std::filesystem::path& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix_csv(const std::filesystem::path& path);
/// One value per line.
void write_vector_csv(const std::filesystem::path& path, const Eigen::VectorXd& v);
Eigen::VectorXd read_vector_csv(const std::filesystem::path& path);

/// Headed table; all columns must have equal length.
void write_table_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// chains/chain_<c>/ layout: x.csv, sigma2.csv, tau2.csv, nu.csv, w2.csv
/// (empty blocks omitted) and meta.json.
void write_chain(const std::filesystem::path& dir, const ChainRecord& chain);
ChainRecord read_chain(const std::filesystem::path& dir);

}  // namespace stmrf
