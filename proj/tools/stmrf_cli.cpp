#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "stmrf/errors.hpp"
#include "stmrf/experiments.hpp"
#include "stmrf/io.hpp"

namespace fs = std::filesystem;

namespace {

enum ExitCode { kOk = 0, kConfigError = 1, kNumericalError = 2, kIoError = 3 };

struct Overrides {
  std::string config_file;
  std::vector<std::string> settings;
  std::optional<std::string> sampler, prior, nu_prior, x_sampler;
  std::optional<std::size_t> n_samples, n_burnin, n_thin, chains;
  std::optional<int> source_points;
  std::optional<std::uint64_t> seed;
};

void add_override_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "key = value settings file")->check(CLI::ExistingFile);
  cmd->add_option("--set", o.settings, "override one setting, key=value (repeatable)");
}

void apply_overrides(stmrf::ExperimentConfig& c, const Overrides& o) {
  if (!o.config_file.empty()) c = stmrf::parse_config_text(stmrf::read_text(o.config_file), c);
  for (const auto& kv : o.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw stmrf::ConfigError("--set expects key=value, got '" + kv + "'");
    stmrf::set_config_value(c, kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (o.sampler) stmrf::set_config_value(c, "sampler", *o.sampler);
  if (o.prior) stmrf::set_config_value(c, "prior", *o.prior);
  if (o.nu_prior) stmrf::set_config_value(c, "nu_prior", *o.nu_prior);
  if (o.x_sampler) stmrf::set_config_value(c, "x_sampler", *o.x_sampler);
  if (o.n_samples) c.n_samples = *o.n_samples;
  if (o.n_burnin) c.n_burnin = *o.n_burnin;
  if (o.n_thin) c.n_thin = *o.n_thin;
  if (o.chains) c.n_chains = *o.chains;
  if (o.source_points) c.source_grid_points = *o.source_points;
  stmrf::validate(c);
}

int run(int argc, char** argv) {
  CLI::App app{"Bayesian linear inversion with Student's t Markov random field priors"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "synthesize a data set from a preset");
  std::string gen_preset = "deconv-sharp";
  std::string gen_out;
  std::optional<std::uint64_t> gen_seed;
  bool dump_matrix = false;
  Overrides gen_o;
  gen->add_option("--preset", gen_preset, "deconv-sharp, deconv-smooth or deblur");
  gen->add_option("--seed", gen_seed, "noise seed");
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_flag("--dump-matrix", dump_matrix, "also write the dense forward matrix as A.csv");
  add_override_options(gen, gen_o);

  // sample
  auto* smp = app.add_subcommand("sample", "run the configured sampler on a generated data set");
  std::string smp_data, smp_out;
  bool force = false;
  Overrides smp_o;
  smp->add_option("--data", smp_data, "directory written by generate")->required();
  smp->add_option("--out", smp_out, "run directory")->required();
  smp->add_option("--seed", smp_o.seed, "sampler seed");
  smp->add_option("--chains", smp_o.chains, "number of independent chains");
  smp->add_option("--sampler", smp_o.sampler, "gibbs or nuts");
  smp->add_option("--prior", smp_o.prior, "student-t, laplace or cauchy");
  smp->add_option("--nu-prior", smp_o.nu_prior, "gamma, lognormal, gamma-thr or gamma3-thr");
  smp->add_option("--x-sampler", smp_o.x_sampler, "cholesky or perturb-cg");
  smp->add_option("--n-samples", smp_o.n_samples, "kept samples per chain");
  smp->add_option("--n-burnin", smp_o.n_burnin, "burn-in iterations");
  smp->add_option("--n-thin", smp_o.n_thin, "thinning interval (Gibbs)");
  smp->add_option("--source-points", smp_o.source_points, "unknowns of a 1D inversion grid");
  smp->add_flag("--force", force, "replace an existing run directory");
  add_override_options(smp, smp_o);

  // diagnose
  auto* dia = app.add_subcommand("diagnose", "ESS, R-hat and plot series for one or more runs");
  std::vector<std::string> dia_runs;
  std::string dia_out;
  dia->add_option("runs", dia_runs, "run directories")->required()->check(CLI::ExistingDirectory);
  dia->add_option("--out", dia_out, "output directory")->required();

  // report
  auto* rep = app.add_subcommand("report", "print the posterior table of a run");
  std::string rep_run;
  rep->add_option("run", rep_run, "run directory")->required()->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfigError;
  }

  if (gen->parsed()) {
    stmrf::ExperimentConfig c = stmrf::preset_config(gen_preset);
    apply_overrides(c, gen_o);
    if (gen_seed) c.data_seed = *gen_seed;
    const auto data = stmrf::generate_data(c);
    stmrf::write_generated(gen_out, c, data);
    if (dump_matrix) {
      stmrf::write_matrix_csv(fs::path(gen_out) / "A.csv", stmrf::build_forward_operator(c).to_dense());
    }
    std::cout << "wrote " << gen_out << " (m = " << data.y.size() << ", d = " << data.x_true.size()
              << ")\n";
  } else if (smp->parsed()) {
    auto loaded = stmrf::read_generated(smp_data);
    stmrf::ExperimentConfig c = loaded.config;
    apply_overrides(c, smp_o);
    if (smp_o.seed) c.seed = *smp_o.seed;
    // The data grid and noise are fixed by the data set.
    if (c.data_grid_points != loaded.config.data_grid_points || c.signal != loaded.config.signal ||
        c.signal_amplitude != loaded.config.signal_amplitude || c.data_seed != loaded.config.data_seed) {
      throw stmrf::ConfigError("overrides may not change the data set; regenerate instead");
    }
    const auto problem = stmrf::build_problem(c, loaded.data.y);
    const auto chains = stmrf::run_chains(c, problem);
    const Eigen::VectorXd ref = stmrf::reference_solution(c);
    stmrf::write_run(smp_out, c, chains, &ref, force);
    std::cout << stmrf::report_run(smp_out);
  } else if (dia->parsed()) {
    std::vector<fs::path> runs(dia_runs.begin(), dia_runs.end());
    stmrf::diagnose_runs(runs, dia_out);
    std::cout << "wrote diagnostics to " << dia_out << "\n";
  } else if (rep->parsed()) {
    std::cout << stmrf::report_run(rep_run);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const stmrf::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const stmrf::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const stmrf::IoError& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "I/O error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kNumericalError;
  }
}
