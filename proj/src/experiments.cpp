#include "stmrf/experiments.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <future>
#include <map>
#include <random>
#include <sstream>
#include <unistd.h>

#include <json.hpp>

#include "stmrf/errors.hpp"
#include "stmrf/io.hpp"
#include "stmrf/operators.hpp"
#include "stmrf/signals.hpp"

namespace stmrf {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string trim(std::string s) {
  const auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  try {
    return parse_double(v);
  } catch (const ConfigError&) {
    throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

std::string sampler_name(SamplerKind s) { return s == SamplerKind::Gibbs ? "gibbs" : "nuts"; }

std::string x_sampler_name(XSampler s) {
  return s == XSampler::Cholesky ? "cholesky" : "perturb-cg";
}

std::string geometry_name(Geometry::Kind k) { return k == Geometry::Kind::Line ? "line" : "grid"; }

Geometry source_geometry(const ExperimentConfig& c) {
  return c.geometry == Geometry::Kind::Line ? Geometry::line(c.source_points())
                                            : Geometry::grid(c.data_grid_points);
}

json scalar_json(const ScalarSummary& s) {
  json j;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["median"] = s.median;
  j["n_eff"] = s.n_eff;
  j["hdi95_lo"] = s.hdi_lo;
  j["hdi95_hi"] = s.hdi_hi;
  j["r_hat"] = s.r_hat;
  return j;
}

json summary_json(const ExperimentConfig& c, const PosteriorSummary& s,
                  const std::vector<ChainRecord>& chains) {
  json j;
  j["preset"] = c.preset;
  j["sampler"] = sampler_name(c.sampler);
  j["prior"] = prior_kind_name(c.prior);
  j["n_chains"] = s.n_chains;
  j["n_samples_per_chain"] = s.n_samples_per_chain;
  j["eps_rel"] = s.eps_rel;
  for (const auto& [name, ss] : s.scalar_blocks) j["scalars"][name] = scalar_json(ss);
  for (const auto& [name, r] : s.r_hat_max) j["r_hat_max"][name] = r;
  j["x"]["min_n_eff"] = s.n_eff.minCoeff();
  j["x"]["mean_std"] = s.std.mean();
  std::vector<std::uint64_t> seeds;
  for (const auto& ch : chains) seeds.push_back(ch.seed);
  j["chain_seeds"] = seeds;
  std::map<std::string, std::string> kv;
  std::istringstream in(config_to_text(c));
  for (std::string line; std::getline(in, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  j["config"] = kv;
  if (!chains.empty()) {
    j["sampler_config"] = chains.front().config_echo;
    std::vector<std::map<std::string, double>> stats;
    for (const auto& ch : chains) stats.push_back(ch.stats);
    j["sampler_stats"] = stats;
  }
  return j;
}

void write_x_bands(const fs::path& path, const PosteriorSummary& s, const Eigen::VectorXd* x_true) {
  const auto d = static_cast<std::size_t>(s.mean.size());
  std::vector<double> idx(d);
  for (std::size_t i = 0; i < d; ++i) idx[i] = static_cast<double>(i);
  auto vec = [](const Eigen::VectorXd& v) { return std::vector<double>(v.begin(), v.end()); };
  std::vector<std::string> header{"index", "mean", "median", "std", "hdi95_lo", "hdi95_hi"};
  std::vector<std::vector<double>> cols{idx, vec(s.mean), vec(s.median), vec(s.std),
                                        vec(s.hdi_lo), vec(s.hdi_hi)};
  if (x_true && x_true->size() == s.mean.size()) {
    header.push_back("x_true");
    cols.push_back(vec(*x_true));
  }
  write_table_csv(path, header, cols);
}

void write_table(const fs::path& path, const PosteriorSummary& s) {
  std::string text = "parameter,mean,std,n_eff,hdi95_lo,hdi95_hi,r_hat\n";
  for (const auto& [name, ss] : s.scalar_blocks) {
    text += name + "," + format_double(ss.mean) + "," + format_double(ss.std) + "," +
            format_double(ss.n_eff) + "," + format_double(ss.hdi_lo) + "," +
            format_double(ss.hdi_hi) + "," + format_double(ss.r_hat) + "\n";
  }
  write_text(path, text);
}

}  // namespace

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names{"deconv-sharp", "deconv-smooth", "deblur"};
  return names;
}

ExperimentConfig preset_config(const std::string& name) {
  ExperimentConfig c;
  c.preset = name;
  if (name == "deconv-sharp") return c;
  if (name == "deconv-smooth") {
    c.kernel_sigma_grid_units = 8.0;
    c.noise_std_true = 4.368e-2;
    c.signal = "gaussian-bumps";
    return c;
  }
  if (name == "deblur") {
    c.geometry = Geometry::Kind::Grid;
    c.data_grid_points = 64;
    c.kernel_sigma_grid_units = 6.0;
    c.noise_std_true = 3.3e-3;
    c.exclude_boundary = false;
    c.signal = "square-disk";
    c.signal_amplitude = 0.91;
    c.x_sampler = XSampler::PerturbCg;
    return c;
  }
  std::string known;
  for (const auto& n : preset_names()) known += " " + n;
  throw ConfigError("unknown preset '" + name + "' (known:" + known + ")");
}

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  os << "preset = " << c.preset << "\n"
     << "geometry = " << geometry_name(c.geometry) << "\n"
     << "data_grid_points = " << c.data_grid_points << "\n"
     << "source_grid_points = " << c.source_points() << "\n"
     << "kernel_sigma_grid_units = " << format_double(c.kernel_sigma_grid_units) << "\n"
     << "noise_std_true_data_units = " << format_double(c.noise_std_true) << "\n"
     << "exclude_boundary = " << (c.exclude_boundary ? "true" : "false") << "\n"
     << "signal = " << c.signal << "\n"
     << "signal_amplitude = " << format_double(c.signal_amplitude) << "\n"
     << "prior = " << prior_kind_name(c.prior) << "\n"
     << "nu_prior = " << c.nu_prior << "\n"
     << "sampler = " << sampler_name(c.sampler) << "\n"
     << "n_samples = " << c.n_samples << "\n"
     << "n_burnin_iterations = " << c.n_burnin << "\n"
     << "n_thin_iterations = " << c.n_thin << "\n"
     << "nu_warmup_steps = " << c.nu_warmup << "\n"
     << "n_chains = " << c.n_chains << "\n"
     << "seed = " << c.seed << "\n"
     << "data_seed = " << c.data_seed << "\n"
     << "x_sampler = " << x_sampler_name(c.x_sampler) << "\n"
     << "cg_relative_tolerance = " << format_double(c.cg_tol) << "\n"
     << "cg_max_iterations = " << c.cg_max_iter << "\n"
     << "scale_hyper_shape = " << format_double(c.scale_hyper_a) << "\n"
     << "scale_hyper_scale = " << format_double(c.scale_hyper_b) << "\n"
     << "noise_hyper_shape = " << format_double(c.noise_hyper_a) << "\n"
     << "noise_hyper_scale_data_units2 = " << format_double(c.noise_hyper_b) << "\n"
     << "mu_location = " << format_double(c.mu_location) << "\n"
     << "laplace_smoothing_eps = " << format_double(c.laplace_eps) << "\n"
     << "nuts_max_tree_depth = " << c.nuts_max_depth << "\n"
     << "nuts_target_accept = " << format_double(c.nuts_target_accept) << "\n";
  return os.str();
}

void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& raw) {
  const std::string v = trim(raw);
  if (key == "preset") {
    c.preset = v;
  } else if (key == "geometry") {
    if (v == "line") c.geometry = Geometry::Kind::Line;
    else if (v == "grid") c.geometry = Geometry::Kind::Grid;
    else throw ConfigError("geometry must be line or grid, got '" + v + "'");
  } else if (key == "data_grid_points") {
    c.data_grid_points = static_cast<int>(parse_uint(key, v));
  } else if (key == "source_grid_points") {
    c.source_grid_points = static_cast<int>(parse_uint(key, v));
  } else if (key == "kernel_sigma_grid_units") {
    c.kernel_sigma_grid_units = parse_real(key, v);
  } else if (key == "noise_std_true_data_units") {
    c.noise_std_true = parse_real(key, v);
  } else if (key == "exclude_boundary") {
    c.exclude_boundary = parse_bool(key, v);
  } else if (key == "signal") {
    c.signal = v;
  } else if (key == "signal_amplitude") {
    c.signal_amplitude = parse_real(key, v);
  } else if (key == "prior") {
    c.prior = parse_prior_kind(v);
  } else if (key == "nu_prior") {
    NuPrior::preset(v);
    c.nu_prior = v;
  } else if (key == "sampler") {
    if (v == "gibbs") c.sampler = SamplerKind::Gibbs;
    else if (v == "nuts") c.sampler = SamplerKind::Nuts;
    else throw ConfigError("sampler must be gibbs or nuts, got '" + v + "'");
  } else if (key == "n_samples") {
    c.n_samples = parse_uint(key, v);
  } else if (key == "n_burnin_iterations") {
    c.n_burnin = parse_uint(key, v);
  } else if (key == "n_thin_iterations") {
    c.n_thin = parse_uint(key, v);
  } else if (key == "nu_warmup_steps") {
    c.nu_warmup = parse_uint(key, v);
  } else if (key == "n_chains") {
    c.n_chains = parse_uint(key, v);
  } else if (key == "seed") {
    c.seed = parse_uint(key, v);
  } else if (key == "data_seed") {
    c.data_seed = parse_uint(key, v);
  } else if (key == "x_sampler") {
    if (v == "cholesky") c.x_sampler = XSampler::Cholesky;
    else if (v == "perturb-cg") c.x_sampler = XSampler::PerturbCg;
    else throw ConfigError("x_sampler must be cholesky or perturb-cg, got '" + v + "'");
  } else if (key == "cg_relative_tolerance") {
    c.cg_tol = parse_real(key, v);
  } else if (key == "cg_max_iterations") {
    c.cg_max_iter = static_cast<int>(parse_uint(key, v));
  } else if (key == "scale_hyper_shape") {
    c.scale_hyper_a = parse_real(key, v);
  } else if (key == "scale_hyper_scale") {
    c.scale_hyper_b = parse_real(key, v);
  } else if (key == "noise_hyper_shape") {
    c.noise_hyper_a = parse_real(key, v);
  } else if (key == "noise_hyper_scale_data_units2") {
    c.noise_hyper_b = parse_real(key, v);
  } else if (key == "mu_location") {
    c.mu_location = parse_real(key, v);
  } else if (key == "laplace_smoothing_eps") {
    c.laplace_eps = parse_real(key, v);
  } else if (key == "nuts_max_tree_depth") {
    c.nuts_max_depth = static_cast<int>(parse_uint(key, v));
  } else if (key == "nuts_target_accept") {
    c.nuts_target_accept = parse_real(key, v);
  } else {
    throw ConfigError("unknown configuration key '" + key + "'");
  }
}

ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  int lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
    }
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

void validate(const ExperimentConfig& c) {
  if (c.data_grid_points < 3) throw ConfigError("data_grid_points must be at least 3");
  if (c.geometry == Geometry::Kind::Grid && c.source_grid_points != 0 &&
      c.source_grid_points != c.data_grid_points) {
    throw ConfigError("a separate source grid is only supported for the line geometry");
  }
  if (c.source_points() < 2) throw ConfigError("source_grid_points must be at least 2");
  if (!(c.kernel_sigma_grid_units > 0.0)) throw ConfigError("kernel width must be positive");
  if (!(c.noise_std_true >= 0.0)) throw ConfigError("noise std must be non-negative");
  if (c.signal != "piecewise-constant" && c.signal != "gaussian-bumps" &&
      c.signal != "square-disk") {
    throw ConfigError("unknown signal '" + c.signal + "'");
  }
  if (!(c.signal_amplitude > 0.0) || !std::isfinite(c.signal_amplitude)) {
    throw ConfigError("signal_amplitude must be positive");
  }
  if ((c.signal == "square-disk") != (c.geometry == Geometry::Kind::Grid)) {
    throw ConfigError("signal '" + c.signal + "' does not match the geometry");
  }
  NuPrior::preset(c.nu_prior);
  if (c.n_samples < 1) throw ConfigError("n_samples must be positive");
  if (c.n_thin < 1) throw ConfigError("n_thin_iterations must be positive");
  if (c.n_chains < 1) throw ConfigError("n_chains must be positive");
  if (c.sampler == SamplerKind::Gibbs && c.prior != PriorKind::StudentT) {
    throw ConfigError("the Gibbs sampler supports only the student-t prior");
  }
  if (!(c.scale_hyper_a > 0 && c.scale_hyper_b > 0 && c.noise_hyper_a > 0 &&
        c.noise_hyper_b > 0)) {
    throw ConfigError("hyperprior parameters must be positive");
  }
  if (!(c.cg_tol > 0.0) || c.cg_max_iter < 1) throw ConfigError("invalid CG settings");
  if (!(c.laplace_eps > 0.0)) throw ConfigError("laplace_smoothing_eps must be positive");
  if (c.nuts_max_depth < 1 || !(c.nuts_target_accept > 0 && c.nuts_target_accept < 1)) {
    throw ConfigError("invalid NUTS settings");
  }
}

Eigen::VectorXd true_signal(const ExperimentConfig& c, int n) {
  const double a = c.signal_amplitude;
  if (c.signal == "piecewise-constant") return a * PiecewiseConstantSignal{}.sample(n);
  if (c.signal == "gaussian-bumps") return a * GaussianBumpSignal{}.sample(n);
  if (c.signal == "square-disk") return a * SquareDiskPhantom{}.sample(n);
  throw ConfigError("unknown signal '" + c.signal + "'");
}

ForwardOperator build_forward_operator(const ExperimentConfig& c) {
  if (c.geometry == Geometry::Kind::Grid) {
    return gaussian_blur_operator_2d(c.data_grid_points, c.kernel_sigma_grid_units);
  }
  const int n = c.data_grid_points;
  if (c.source_points() == n) {
    return ForwardOperator(gaussian_kernel_matrix_1d(n, c.kernel_sigma_grid_units,
                                                     c.exclude_boundary));
  }
  return ForwardOperator(gaussian_kernel_matrix_at(midpoint_grid(n, c.exclude_boundary),
                                                   c.source_points(),
                                                   c.kernel_sigma_grid_units / n));
}

GeneratedData generate_data(const ExperimentConfig& c) {
  validate(c);
  ExperimentConfig data_cfg = c;
  data_cfg.source_grid_points = 0;
  GeneratedData g;
  g.x_true = true_signal(c, c.data_grid_points);
  g.y = synthesize_data(g.x_true, build_forward_operator(data_cfg), c.noise_std_true,
                        c.data_seed);
  g.truth = TruthBundle{g.x_true, c.noise_std_true, c.data_seed};
  return g;
}

LinearInverseProblem build_problem(const ExperimentConfig& c, const Eigen::VectorXd& y) {
  validate(c);
  return LinearInverseProblem(build_forward_operator(c), y, source_geometry(c),
                              c.kernel_sigma_grid_units);
}

Eigen::VectorXd reference_solution(const ExperimentConfig& c) {
  return true_signal(c, c.geometry == Geometry::Kind::Line ? c.source_points()
                                                           : c.data_grid_points);
}

std::uint64_t chain_seed(std::uint64_t run_seed, std::size_t chain_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(run_seed), static_cast<std::uint32_t>(run_seed >> 32),
                    static_cast<std::uint32_t>(chain_index), 0xc4a1u};
  std::mt19937_64 engine(seq);
  return engine();
}

GibbsConfig gibbs_config(const ExperimentConfig& c, std::uint64_t seed) {
  GibbsConfig g;
  g.n_samples = c.n_samples;
  g.n_burnin = c.n_burnin;
  g.n_thin = c.n_thin;
  g.nu_warmup = c.nu_warmup;
  g.seed = seed;
  g.nu_prior = NuPrior::preset(c.nu_prior);
  g.scale_hyper = {c.scale_hyper_a, c.scale_hyper_b};
  g.noise_hyper = {c.noise_hyper_a, c.noise_hyper_b};
  g.mu_location = c.mu_location;
  g.x_sampler = c.x_sampler;
  g.cg = CgOptions{c.cg_tol, c.cg_max_iter};
  return g;
}

NutsConfig nuts_config(const ExperimentConfig& c, std::uint64_t seed) {
  NutsConfig n;
  n.n_samples = c.n_samples;
  n.n_warmup = c.n_burnin;
  n.seed = seed;
  n.max_depth = c.nuts_max_depth;
  n.target_accept = c.nuts_target_accept;
  return n;
}

ChainRecord run_chain(const ExperimentConfig& c, const LinearInverseProblem& problem,
                      std::uint64_t seed) {
  const DifferenceOperator L = build_difference_operator(problem.geometry);
  if (c.sampler == SamplerKind::Gibbs) return run_gibbs(problem, L, gibbs_config(c, seed));
  const TargetPosterior target(c.prior, problem, L, NuPrior::preset(c.nu_prior),
                               {c.scale_hyper_a, c.scale_hyper_b},
                               {c.noise_hyper_a, c.noise_hyper_b}, c.mu_location, c.laplace_eps);
  return run_nuts(target, nuts_config(c, seed));
}

std::vector<ChainRecord> run_chains(const ExperimentConfig& c,
                                    const LinearInverseProblem& problem) {
  validate(c);
  std::vector<std::future<ChainRecord>> futures;
  for (std::size_t i = 0; i < c.n_chains; ++i) {
    futures.push_back(std::async(std::launch::async, [&c, &problem, i] {
      return run_chain(c, problem, chain_seed(c.seed, i));
    }));
  }
  std::vector<ChainRecord> out;
  for (auto& f : futures) out.push_back(f.get());
  return out;
}

std::string summary_table_text(const PosteriorSummary& s) {
  std::ostringstream os;
  os << "| parameter | mean | std | n_eff | 95% HDI | R-hat |\n"
     << "|---|---|---|---|---|---|\n";
  os.precision(5);
  for (const auto& [name, ss] : s.scalar_blocks) {
    os << "| " << name << " | " << ss.mean << " | " << ss.std << " | "
       << static_cast<long long>(std::llround(ss.n_eff)) << " | [" << ss.hdi_lo << ", "
       << ss.hdi_hi << "] | ";
    if (std::isnan(ss.r_hat)) os << "-";
    else os << ss.r_hat;
    os << " |\n";
  }
  if (!std::isnan(s.eps_rel)) os << "\nrelative error of the posterior mean: " << s.eps_rel << "\n";
  return os.str();
}

void write_generated(const fs::path& dir, const ExperimentConfig& c, const GeneratedData& data) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text(dir / "config.txt", config_to_text(c));
  write_vector_csv(dir / "x_true.csv", data.x_true);
  write_vector_csv(dir / "y.csv", data.y);
  const ForwardOperator a = build_forward_operator(c);
  json t;
  t["sigma_obs_true"] = data.truth.sigma_obs_true;
  t["seed"] = data.truth.seed;
  t["m"] = a.rows();
  t["d"] = a.cols();
  t["geometry"] = geometry_name(c.geometry);
  t["data_grid_points"] = c.data_grid_points;
  t["kernel_sigma_grid_units"] = c.kernel_sigma_grid_units;
  t["forward_operator"] = a.is_kronecker() ? "kronecker" : "dense";
  t["x_true_norm"] = data.x_true.norm();
  write_text(dir / "truth.json", t.dump(2) + "\n");
}

LoadedData read_generated(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("data directory not found: " + dir.string());
  LoadedData out;
  out.config = parse_config_text(read_text(dir / "config.txt"));
  out.data.x_true = read_vector_csv(dir / "x_true.csv");
  out.data.y = read_vector_csv(dir / "y.csv");
  try {
    const json t = json::parse(read_text(dir / "truth.json"));
    out.data.truth = TruthBundle{out.data.x_true, t.at("sigma_obs_true").get<double>(),
                                 t.at("seed").get<std::uint64_t>()};
  } catch (const json::exception& e) {
    throw IoError(dir.string() + "/truth.json: " + e.what());
  }
  return out;
}

void write_run(const fs::path& dir, const ExperimentConfig& c,
               const std::vector<ChainRecord>& chains, const Eigen::VectorXd* x_true,
               bool overwrite) {
  if (fs::exists(dir) && !overwrite) {
    throw IoError("output directory exists: " + dir.string() + " (use --force to replace)");
  }
  const fs::path parent = dir.has_parent_path() ? dir.parent_path() : fs::path(".");
  std::error_code ec;
  fs::create_directories(parent, ec);
  if (ec) throw IoError("cannot create " + parent.string() + ": " + ec.message());
  const fs::path tmp =
      parent / (dir.filename().string() + ".partial-" + std::to_string(::getpid()));
  fs::remove_all(tmp, ec);
  try {
    fs::create_directories(tmp / "plotdata");
    write_text(tmp / "config.txt", config_to_text(c));
    for (std::size_t i = 0; i < chains.size(); ++i) {
      write_chain(tmp / "chains" / ("chain_" + std::to_string(i)), chains[i]);
    }
    if (x_true) write_vector_csv(tmp / "x_true.csv", *x_true);
    const PosteriorSummary s = summarize(chains, x_true);
    write_text(tmp / "summary.json", summary_json(c, s, chains).dump(2) + "\n");
    write_table(tmp / "table.csv", s);
    write_x_bands(tmp / "plotdata" / "x_bands.csv", s, x_true);
    json meta;
    double total = 0.0;
    std::vector<double> walls;
    for (const auto& ch : chains) {
      walls.push_back(ch.wall_time_seconds);
      total += ch.wall_time_seconds;
    }
    meta["wall_time_seconds_per_chain"] = walls;
    meta["wall_time_seconds_total"] = total;
    meta["n_chains"] = chains.size();
    write_text(tmp / "meta.json", meta.dump(2) + "\n");
  } catch (...) {
    fs::remove_all(tmp, ec);
    throw;
  }
  if (fs::exists(dir)) fs::remove_all(dir, ec);
  fs::rename(tmp, dir, ec);
  if (ec) {
    fs::remove_all(tmp, ec);
    throw IoError("cannot move run into " + dir.string());
  }
}

LoadedRun read_run(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("run directory not found: " + dir.string());
  LoadedRun r;
  r.config = parse_config_text(read_text(dir / "config.txt"));
  std::vector<fs::path> chain_dirs;
  for (const auto& entry : fs::directory_iterator(dir / "chains")) {
    if (entry.is_directory()) chain_dirs.push_back(entry.path());
  }
  std::sort(chain_dirs.begin(), chain_dirs.end(), [](const fs::path& a, const fs::path& b) {
    const auto num = [](const fs::path& p) {
      const std::string s = p.filename().string();
      return std::stoul(s.substr(s.find('_') + 1));
    };
    return num(a) < num(b);
  });
  for (const auto& p : chain_dirs) r.chains.push_back(read_chain(p));
  if (r.chains.empty()) throw IoError("no chains in " + dir.string());
  if (fs::exists(dir / "x_true.csv")) r.x_true = read_vector_csv(dir / "x_true.csv");
  return r;
}

PosteriorSummary diagnose_runs(const std::vector<fs::path>& run_dirs, const fs::path& out_dir) {
  if (run_dirs.empty()) throw ConfigError("diagnose needs at least one run directory");
  std::vector<ChainRecord> chains;
  ExperimentConfig first;
  Eigen::VectorXd x_true;
  for (std::size_t i = 0; i < run_dirs.size(); ++i) {
    LoadedRun r = read_run(run_dirs[i]);
    if (i == 0) {
      first = r.config;
      x_true = r.x_true;
    } else {
      ExperimentConfig a = first, b = r.config;
      a.seed = b.seed = 0;
      a.n_chains = b.n_chains = 0;
      if (config_to_text(a) != config_to_text(b)) {
        throw ConfigError("run configurations differ: " + run_dirs[0].string() + " vs " +
                          run_dirs[i].string());
      }
    }
    for (auto& ch : r.chains) chains.push_back(std::move(ch));
  }
  const PosteriorSummary s = summarize(chains, x_true.size() ? &x_true : nullptr);

  std::error_code ec;
  fs::create_directories(out_dir / "plotdata", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  json j;
  j["n_chains"] = chains.size();
  j["n_samples_per_chain"] = s.n_samples_per_chain;
  j["eps_rel"] = s.eps_rel;
  for (const auto& [name, ss] : s.scalar_blocks) j["scalars"][name] = scalar_json(ss);
  for (const auto& [name, r] : s.r_hat_max) j["r_hat_max"][name] = r;
  j["x"]["min_n_eff"] = s.n_eff.minCoeff();
  j["x"]["median_n_eff"] = [&] {
    std::vector<double> v(s.n_eff.begin(), s.n_eff.end());
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  }();

  const int max_lag = 200;
  for (std::size_t c = 0; c < chains.size(); ++c) {
    const auto traces = scalar_traces(chains[c]);
    std::vector<std::string> header{"iteration"};
    std::vector<std::vector<double>> cumulative, acf;
    std::vector<std::string> acf_header{"lag"};
    for (const auto& [name, trace] : traces) {
      header.push_back(name);
      acf_header.push_back(name);
      cumulative.push_back(cumulative_mean(trace));
      const Eigen::VectorXd a = autocorrelation(trace, max_lag);
      acf.emplace_back(a.begin(), a.end());
      if (trace.size() >= 10) {
        j["chains"][c]["ess"][name] = effective_sample_size(trace);
      }
    }
    if (traces.empty()) continue;
    std::vector<double> it(cumulative.front().size());
    for (std::size_t i = 0; i < it.size(); ++i) it[i] = static_cast<double>(i + 1);
    cumulative.insert(cumulative.begin(), it);
    write_table_csv(out_dir / "plotdata" / ("cumulative_mean_chain_" + std::to_string(c) + ".csv"),
                    header, cumulative);
    std::vector<double> lags(acf.front().size());
    for (std::size_t i = 0; i < lags.size(); ++i) lags[i] = static_cast<double>(i);
    acf.insert(acf.begin(), lags);
    write_table_csv(out_dir / "plotdata" / ("autocorrelation_chain_" + std::to_string(c) + ".csv"),
                    acf_header, acf);
  }
  write_x_bands(out_dir / "plotdata" / "x_bands.csv", s, x_true.size() ? &x_true : nullptr);
  if (chains.front().w2_samples.size()) {
    std::vector<ChainRecord> w_chains;
    for (const auto& ch : chains) {
      ChainRecord w;
      w.x_samples = ch.w2_samples.array().sqrt().matrix();
      w_chains.push_back(std::move(w));
    }
    write_x_bands(out_dir / "plotdata" / "w_bands.csv", summarize(w_chains), nullptr);
  }
  write_text(out_dir / "diagnostics.json", j.dump(2) + "\n");
  write_table(out_dir / "table.csv", s);
  return s;
}

std::string report_run(const fs::path& run_dir) {
  const LoadedRun r = read_run(run_dir);
  const PosteriorSummary s = summarize(r.chains, r.x_true.size() ? &r.x_true : nullptr);
  std::ostringstream os;
  os << "run: " << run_dir.string() << "\n"
     << "preset: " << r.config.preset << ", sampler: " << sampler_name(r.config.sampler)
     << ", prior: " << prior_kind_name(r.config.prior);
  if (r.config.prior == PriorKind::StudentT) os << ", nu prior: " << r.config.nu_prior;
  os << "\nchains: " << s.n_chains << " x " << s.n_samples_per_chain << " samples\n\n"
     << summary_table_text(s);
  if (!s.r_hat_max.empty()) {
    os << "\nmaximum split R-hat:";
    for (const auto& [name, v] : s.r_hat_max) os << " " << name << "=" << v;
    os << "\n";
  }
  return os.str();
}

}  // namespace stmrf
