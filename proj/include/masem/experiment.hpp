#pragma once

#include "masem/baselines.hpp"
#include "masem/benchmarks.hpp"
#include "masem/metrics.hpp"

#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace masem {

struct Hyperparameters {
  double tau = 1.0;
  int m_steps = 50;
  int k = 4;
};

/// Tuned (tau, M, k) per problem and kernel.
Hyperparameters default_hyperparameters(const std::string& problem, KernelKind kernel);

/// Kernel step sizes per problem (NHR max step, OLLA step size, barrier).
KernelConfig default_kernel(const std::string& problem, KernelKind kernel);

/// nhr, olla, masem-nhr, masem-olla, scmc, cluster-nhr
std::vector<std::string> method_names();

struct RunConfig {
  std::string problem;
  std::string method;
  std::uint64_t seed = 0;
  int n_particles = 500;
  int total_steps = 1000;  ///< kernel applications per particle
  std::optional<double> tau;
  std::optional<int> k;
  std::optional<int> m_steps;
  double mu = 1000.0;
  std::vector<std::string> metrics{"slack", "sinkhorn", "pairwise-kl", "tv", "feasible-entropy", "homotopy-entropy"};
  /// Evaluate every this many method iterations (kernel steps for plain
  /// chains, resampling rounds for MASEM and Cluster-NHR, stages for SCMC);
  /// 0 evaluates only the final ensemble.
  int eval_every = 0;
  std::filesystem::path out_dir = "results";
  bool write_files = true;
};

struct RunOutcome {
  Points positions;
  std::vector<metrics::MetricReport> reports;
  std::optional<double> pre_projection_slack;  ///< SCMC only
  std::filesystem::path jsonl_path;
  std::filesystem::path csv_path;
};

/// Fixed CSV summary columns.
std::vector<std::string> summary_columns();

/// Ground-truth samples for (problem, seed, n), cached under `dir` as text
/// with round-trip precision; the cache file is written via rename.
/// `dir` empty disables caching.
Points cached_ground_truth(const ConstraintProblem& problem, std::uint64_t seed, int n,
                           const std::filesystem::path& dir);

/// Runs one configured experiment. Throws InputError for unknown problem or
/// method names; numerical failures are rethrown as RunError with the stage.
RunOutcome run_experiment(const RunConfig& cfg, std::ostream* progress = nullptr);

struct RunError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace masem
