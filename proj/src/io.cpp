#include "stmrf/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "stmrf/errors.hpp"

namespace stmrf {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("not a number: '" + std::string(text) + "'");
  }
  return v;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.close();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_matrix_csv(const fs::path& path, const Eigen::MatrixXd& m) {
  std::string text;
  text.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) text += ',';
      text += format_double(m(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path) {
  const std::string text = read_text(path);
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<double> row;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      const auto field = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      try {
        row.push_back(parse_double(field));
      } catch (const ConfigError& e) {
        throw IoError(path.string() + ": " + e.what());
      }
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw IoError(path.string() + ": ragged rows");
    }
    rows.push_back(std::move(row));
  }
  const auto r = static_cast<Eigen::Index>(rows.size());
  const auto c = rows.empty() ? Eigen::Index{0} : static_cast<Eigen::Index>(rows.front().size());
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return m;
}

void write_vector_csv(const fs::path& path, const Eigen::VectorXd& v) {
  write_matrix_csv(path, Eigen::MatrixXd(v));
}

Eigen::VectorXd read_vector_csv(const fs::path& path) {
  const Eigen::MatrixXd m = read_matrix_csv(path);
  if (m.cols() > 1) throw IoError(path.string() + ": expected a single column");
  return m.size() ? Eigen::VectorXd(m.col(0)) : Eigen::VectorXd();
}

void write_table_csv(const fs::path& path, const std::vector<std::string>& header,
                     const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size()) throw ConfigError("table header and columns differ");
  const std::size_t n = columns.empty() ? 0 : columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != n) throw ConfigError("table columns differ in length");
  }
  std::string text;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j > 0) text += ',';
    text += header[j];
  }
  text += '\n';
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (j > 0) text += ',';
      text += format_double(columns[j][i]);
    }
    text += '\n';
  }
  write_text(path, text);
}

void write_chain(const fs::path& dir, const ChainRecord& chain) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_matrix_csv(dir / "x.csv", chain.x_samples);
  if (chain.sigma2_samples.size()) write_vector_csv(dir / "sigma2.csv", chain.sigma2_samples);
  if (chain.tau2_samples.size()) write_vector_csv(dir / "tau2.csv", chain.tau2_samples);
  if (chain.nu_samples.size()) write_vector_csv(dir / "nu.csv", chain.nu_samples);
  if (chain.w2_samples.size()) write_matrix_csv(dir / "w2.csv", chain.w2_samples);

  json meta;
  meta["sampler"] = chain.sampler;
  meta["prior"] = chain.prior;
  meta["seed"] = chain.seed;
  meta["n_samples"] = chain.n_samples();
  meta["dim"] = chain.dim();
  meta["config"] = chain.config_echo;
  meta["stats"] = chain.stats;
  write_text(dir / "meta.json", meta.dump(2) + "\n");
}

ChainRecord read_chain(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("not a chain directory: " + dir.string());
  ChainRecord c;
  json meta;
  try {
    meta = json::parse(read_text(dir / "meta.json"));
    c.sampler = meta.at("sampler").get<std::string>();
    c.prior = meta.at("prior").get<std::string>();
    c.seed = meta.at("seed").get<std::uint64_t>();
    c.config_echo = meta.at("config").get<std::map<std::string, std::string>>();
    c.stats = meta.at("stats").get<std::map<std::string, double>>();
  } catch (const json::exception& e) {
    throw IoError(dir.string() + "/meta.json: " + e.what());
  }
  c.x_samples = read_matrix_csv(dir / "x.csv");
  if (fs::exists(dir / "sigma2.csv")) c.sigma2_samples = read_vector_csv(dir / "sigma2.csv");
  if (fs::exists(dir / "tau2.csv")) c.tau2_samples = read_vector_csv(dir / "tau2.csv");
  if (fs::exists(dir / "nu.csv")) c.nu_samples = read_vector_csv(dir / "nu.csv");
  if (fs::exists(dir / "w2.csv")) c.w2_samples = read_matrix_csv(dir / "w2.csv");
  return c;
}

}  // namespace stmrf
