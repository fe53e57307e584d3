#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "stmrf/chain.hpp"
#include "stmrf/diagnostics.hpp"
#include "stmrf/gibbs.hpp"
#include "stmrf/model.hpp"
#include "stmrf/nuts.hpp"
#include "stmrf/targets.hpp"

namespace stmrf {

enum class SamplerKind { Gibbs, Nuts };

struct ExperimentConfig {
  std::string preset = "deconv-sharp";
  Geometry::Kind geometry = Geometry::Kind::Line;
  /// Grid of the synthetic data (N for a line, N x N for an image).
  int data_grid_points = 130;
  /// Unknowns used for the inversion; 0 means the data grid. Line only.
  int source_grid_points = 0;
  double kernel_sigma_grid_units = 4.0;
  double noise_std_true = 8.654e-3;
  bool exclude_boundary = true;
  std::string signal = "piecewise-constant";
  /// Multiplies the unit-height signal shape.
  double signal_amplitude = 17.5;
  PriorKind prior = PriorKind::StudentT;
  std::string nu_prior = "gamma-thr";
  SamplerKind sampler = SamplerKind::Gibbs;
  std::size_t n_samples = 20000;
  std::size_t n_burnin = 2000;
  std::size_t n_thin = 20;
  std::size_t nu_warmup = 100;
  std::size_t n_chains = 1;
  std::uint64_t seed = 1;
  std::uint64_t data_seed = 20240101;
  XSampler x_sampler = XSampler::Cholesky;
  double cg_tol = 1e-8;
  int cg_max_iter = 20000;
  double scale_hyper_a = 1.0;
  double scale_hyper_b = 1e-4;
  double noise_hyper_a = 1.0;
  double noise_hyper_b = 1e-4;
  double mu_location = 0.0;
  double laplace_eps = 1e-8;
  int nuts_max_depth = 10;
  double nuts_target_accept = 0.8;

  int source_points() const {
    return source_grid_points > 0 ? source_grid_points : data_grid_points;
  }
};

/// deconv-sharp, deconv-smooth, deblur.
const std::vector<std::string>& preset_names();
ExperimentConfig preset_config(const std::string& name);

/// Flat "key = value" text, one setting per line, every key written.
std::string config_to_text(const ExperimentConfig& c);
/// Applies the settings in `text` on top of `base`. '#' starts a comment.
ExperimentConfig parse_config_text(const std::string& text, ExperimentConfig base = {});
void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value);
/// Throws ConfigError on an inconsistent configuration.
void validate(const ExperimentConfig& c);

/// Ground-truth signal of the preset evaluated on an n-point (or n x n) grid.
Eigen::VectorXd true_signal(const ExperimentConfig& c, int n);
/// Forward operator mapping the source grid to the data points.
ForwardOperator build_forward_operator(const ExperimentConfig& c);

struct GeneratedData {
  Eigen::VectorXd x_true;  // on the data grid
  Eigen::VectorXd y;
  TruthBundle truth;
};

GeneratedData generate_data(const ExperimentConfig& c);
LinearInverseProblem build_problem(const ExperimentConfig& c, const Eigen::VectorXd& y);
/// Reference solution on the source grid for the relative error.
Eigen::VectorXd reference_solution(const ExperimentConfig& c);

/// Per-chain seed derived from the run seed.
std::uint64_t chain_seed(std::uint64_t run_seed, std::size_t chain_index);

GibbsConfig gibbs_config(const ExperimentConfig& c, std::uint64_t seed);
NutsConfig nuts_config(const ExperimentConfig& c, std::uint64_t seed);

ChainRecord run_chain(const ExperimentConfig& c, const LinearInverseProblem& problem,
                      std::uint64_t seed);
/// Runs c.n_chains chains, one worker each.
std::vector<ChainRecord> run_chains(const ExperimentConfig& c,
                                    const LinearInverseProblem& problem);

/// Rows of the scalar-parameter table: parameter, mean, std, n_eff.
std::string summary_table_text(const PosteriorSummary& s);

/// Writes the generated data set (config.txt, x_true.csv, y.csv, truth.json).
void write_generated(const std::filesystem::path& dir, const ExperimentConfig& c,
                     const GeneratedData& data);
struct LoadedData {
  ExperimentConfig config;
  GeneratedData data;
};
LoadedData read_generated(const std::filesystem::path& dir);

/// Writes a complete run directory. Output first goes to a sibling
/// temporary directory that is renamed into place once complete.
void write_run(const std::filesystem::path& dir, const ExperimentConfig& c,
               const std::vector<ChainRecord>& chains, const Eigen::VectorXd* x_true,
               bool overwrite);

struct LoadedRun {
  ExperimentConfig config;
  std::vector<ChainRecord> chains;
  Eigen::VectorXd x_true;  // empty when absent
};
LoadedRun read_run(const std::filesystem::path& dir);

/// Recomputes the summary from stored chains and writes diagnostics and
/// plot series (ESS, R-hat, cumulative means, autocorrelations, HDI bands).
/// Returns the summary of all chains pooled.
PosteriorSummary diagnose_runs(const std::vector<std::filesystem::path>& run_dirs,
                               const std::filesystem::path& out_dir);

/// Text report for one run directory; every number recomputed from chains.
std::string report_run(const std::filesystem::path& run_dir);

}  // namespace stmrf
