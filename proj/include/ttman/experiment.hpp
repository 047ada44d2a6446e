#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "ttman/trust_region.hpp"
#include "ttman/tt.hpp"

namespace ttman {

struct ExperimentConfig {
  Extents n;
  /// Interior ranks (d-1 entries).
  Extents ranks;
  /// One distribution per mode.
  std::vector<std::vector<double>> p;
  double oversampling = 0.0;
  std::vector<std::string> algorithms;
  Index trials = 1;
  std::uint64_t seed = 0;
  TrustRegionConfig trust_region;
  double max_time_s = 60.0;
  Index max_iters = 500;
  std::string output_dir = "run";

  Shape shape() const { return Shape::from_interior(n, ranks); }
  /// round(oversampling * manifold_dim)
  Index omega_size() const;
  /// Throws std::invalid_argument.
  void validate() const;
};

/// Parses the JSON text of a config. Unknown keys are rejected. "n" and
/// "ranks" accept a scalar (broadcast) or a list; "p" accepts one
/// distribution (broadcast) or one per mode and defaults to uniform.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& p);
std::string config_to_json(const ExperimentConfig& cfg);

/// Seeds of one trial, each drawn from a SplitMix64 stream started at
/// master + (trial + 1) * 0x9E3779B97F4A7C15, in the order below.
struct TrialSeeds {
  std::uint64_t target, train, test, init, perturb;
};
TrialSeeds trial_seeds(std::uint64_t master, Index trial);

struct AlgoOutcome {
  std::string algo;
  double final_cost = 0.0;
  double final_test_cost = 0.0;
  double final_grad_norm = 0.0;
  Index iterations = 0;
  bool converged = false;
  std::string stop_reason;
};

struct TrialOutcome {
  Index trial = 0;
  double kappa_target = 0.0;
  double lambda_max_target = 0.0;
  double lambda_min_pos_target = 0.0;
  bool condest_converged = false;
  std::vector<AlgoOutcome> algos;
};

struct ExperimentSummary {
  Index manifold_dim = 0;
  Index omega_size = 0;
  double oversampling_achieved = 0.0;
  double sampling_ratio = 0.0;
  std::vector<TrialOutcome> trials;
};

/// Runs every trial (up to `jobs` concurrently, each single-threaded) and
/// writes <out>/logs/trial_NNN_<algo>.csv and <out>/summary.json. `out`
/// overrides cfg.output_dir when nonempty.
ExperimentSummary run_experiment(const ExperimentConfig& cfg, Index jobs = 1, const std::filesystem::path& out = {});

/// One trial without file output.
TrialOutcome run_trial(const ExperimentConfig& cfg, Index trial, std::vector<RunLog>* logs = nullptr);

}  // namespace ttman
