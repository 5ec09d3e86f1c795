#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pwprox/data.hpp"
#include "pwprox/piecewise.hpp"
#include "pwprox/problem.hpp"
#include "pwprox/solvers.hpp"

namespace pwprox {

struct DataSpec {
  std::string kind = "synth";  ///< synth | csv | idx
  // csv
  std::string path;
  bool header = false;
  // idx
  std::string images;
  std::string labels;
  double class_a = 0.0;
  double class_b = 1.0;
  std::size_t per_class = 5000;
  // synth
  std::size_t n = 500;
  std::size_t d = 50;
  double sparsity = 0.1;
  double noise = 0.0;
  double feature_scale = 1.0;
  std::uint64_t seed = 0;
};

struct SolverSpec {
  std::string name;
  double s = 0.0;  ///< <= 0 selects 1 / (2 L_g)
  double w0 = 0.5;
  std::size_t K = 300;
};

struct ExperimentConfig {
  LossKind loss = LossKind::logistic;
  PenaltyDescriptor penalty{"capped_l1", {{"lambda", 0.2}, {"b", 1.0}}};
  DataSpec data;
  std::vector<SolverSpec> solvers;
  std::string output_dir = "out";
  bool timing = false;  ///< off keeps every output byte-identical across runs
  bool fit_rates = true;
  double rate_tail_fraction = 0.6;

  /// Throws ModelError when the configuration cannot be run.
  void validate() const;
};

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);
std::string config_to_json(const ExperimentConfig& cfg, int indent = 2);

/// Builds the dataset described by `spec` (labels remapped to +-1 for idx).
Dataset load_data(const DataSpec& spec, LossKind loss);

struct SolverSummary {
  std::string name;
  double s = 0.0;
  double w0 = 0.0;
  std::size_t K = 0;
  double final_objective = 0.0;
  double final_residual = 0.0;
  std::size_t transitions = 0;
  std::size_t last_transition = 0;
  double rate_slope = kNaN;
  double F_ref = kNaN;
  double wall_ms = 0.0;
  std::string csv;
};

struct Report {
  ExperimentConfig config;
  std::vector<SolverSummary> summaries;
  std::vector<Trace> traces;
  std::string to_json(int indent = 2) const;
};

/// Number of worker threads: PIECEWISE_PROX_THREADS when set, else all cores.
unsigned harness_threads();

/// Runs every solver on one shared Problem from x0 = 0, writes one CSV per
/// solver and report.json into config.output_dir and returns the report.
Report run_experiment(const ExperimentConfig& config);

/// Least-squares slope of log(F - F_ref) against log k over the last
/// `tail_fraction` of the rows. Gaps at or below 1e-11 (relative to
/// max(1, |F_ref|)) are dropped; fewer than 20 usable points yields -inf.
double fit_rate(const Trace& trace, double tail_fraction, double F_ref);
/// F_ref defaults to the trace minimum minus 1e-12.
double fit_rate(const Trace& trace, double tail_fraction);

}  // namespace pwprox
