#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "spde/estimator.hpp"
#include "spde/reference.hpp"

namespace spde {

struct KernelConfig {
  std::string kind = "squared_exponential";
  double sigma = 1.0;
  double length = 1.0;
};

struct FieldConfig {
  std::string mean_kind = "zero";
  double mean_amplitude = 0.0;
  KernelConfig kernel;
  std::string transform = "none";
  double shift = 0.0;
};

struct ProblemConfig {
  std::string op = "identity";
  std::string mode = "forward";
  double domain_lo = -1.0;
  double domain_hi = 1.0;
  int n_f = 41;
  int n_g = 0;
  int n_k = 0;
  int n_u = 0;
  double noise_f = 0.0;
  double noise_g = 0.0;
  double noise_k = 0.0;
  double noise_u = 0.0;
  double dirichlet = 0.0;
};

struct DataConfig {
  int n_snapshots = 20000;
  int solver_grid_n = 401;  // synthesis grid for inverse problems
};

struct GmmConfig {
  int n_components = 1;
  double reg_rel = 1e-6;  // regularization relative to the mean variance
  int max_iter = 200;
  double tol = 1e-7;
  bool standardize = false;
};

struct ArchConfig {
  int embed_rows = 10;
  std::vector<double> embed_sigmas{1.0, 5.0};
  std::vector<int> hidden{200};
};

struct HmcSection {
  int burn_in = 1000;
  int n_samples = 4000;
  int leapfrog_steps = 100;
  double step_size = 1e-3;
};

struct WarmStartConfig {
  bool enabled = false;
  int steps = 3000;
  double learning_rate = 5e-3;
};

struct ReferenceSection {
  std::string kind = "mc";  // "mc" or "analytic"
  int n_mc = 500000;
  int grid_n = 401;  // per axis
  int cov_subgrid = 0;
};

struct EvalSection {
  int kl_grid = 2048;
  double kl_energy = 0.99;
};

struct ExperimentConfig {
  std::string preset = "custom";
  std::string scale = "desk";
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir;
  ProblemConfig problem;
  FieldConfig f;
  FieldConfig k;
  DataConfig data;
  GmmConfig gmm;
  ArchConfig arch;
  HmcSection hmc;
  WarmStartConfig warm_start;
  ReferenceSection reference;
  EvalSection eval;
};

json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const json& j);

/// Applies one "section.key=value" override to the JSON form of a config.
void apply_override(json& config, const std::string& assignment);

const std::vector<std::string>& preset_names();

/// Paper-faithful preset; scale "desk" shrinks the snapshot count, sample
/// count, reference size, and hidden width to workstation size (and turns on
/// the warm start).
ExperimentConfig preset_config(const std::string& name,
                               const std::string& scale = "desk");

/// Small instance of a preset for derivative checking: narrow network, short
/// dataset, no sampling.
ExperimentConfig reduced_config(ExperimentConfig cfg);

/// Throws ValidationError naming the offending field.
void validate_config(const ExperimentConfig& cfg);

struct BuiltProblem {
  ProblemSpec spec;
  SensorLayout layout;
  DatasetMode mode = DatasetMode::Forward;
};
BuiltProblem build_problem(const ExperimentConfig& cfg);

/// Everything needed to evaluate the posterior, built from a config
/// (synthesis + density fit + network; no sampling).
struct PipelineInstance {
  BuiltProblem problem;
  SnapshotDataset dataset;
  GaussianMixture mixture;
  std::optional<Standardizer> standardizer;
  std::shared_ptr<const FfnModel> model;
  std::unique_ptr<Posterior> posterior;
  EmReport em_report;
  double gmm_reg_abs = 0.0;
};
PipelineInstance build_instance(const ExperimentConfig& cfg);

struct RunResult {
  std::filesystem::path dir;
  json summary;
};

/// Full pipeline: synthesize, fit, sample, estimate, reference, compare.
/// Writes every artifact into cfg.output_dir.
RunResult run_experiment(const ExperimentConfig& cfg);

/// Cross-run tables: normalized cost vs process dimension, and error-vs-N
/// curves per run. Written next to the run dirs (out_dir).
json report_runs(const std::vector<std::filesystem::path>& run_dirs,
                 const std::filesystem::path& out_dir);

struct KlDimRow {
  double length = 0.0;
  int dimension = 0;
};
std::vector<KlDimRow> kl_dimension_table(const KernelConfig& base,
                                         const std::vector<double>& lengths,
                                         double lo, double hi, int grid_n,
                                         double energy);

struct CheckOptions {
  int n_thetas = 5;
  double tolerance = 1e-5;
  std::vector<std::string> presets;  // empty = all
  std::uint64_t seed = 0;
};
struct CheckOutcome {
  bool passed = true;
  json details;
};

/// Derivative and integrator property checks: finite-difference validation of
/// the posterior gradient on reduced presets, leapfrog reversibility, and the
/// energy-error step-size scaling.
CheckOutcome run_checks(const CheckOptions& opts);

/// Stage-tagged wrapper used by the pipeline so failures name their stage.
struct StageError : Error {
  StageError(const std::string& stage, const std::string& what)
      : Error(what), stage(stage) {}
  std::string stage;
};

}  // namespace spde
