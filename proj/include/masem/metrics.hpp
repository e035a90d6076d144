#pragma once

#include "masem/benchmarks.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace masem::metrics {

struct SinkhornResult {
  double cost = 0.0;  ///< <P, C>, entropy term excluded
  bool converged = false;
  int iterations = 0;
  double marginal_error = 0.0;
};

/// Median of the squared Euclidean distances between rows of X and rows of Y.
double median_squared_distance(const Points& X, const Points& Y);

/// 1e-3 * median_squared_distance(X, Y), floored at 1e-12.
double default_sinkhorn_reg(const Points& X, const Points& Y);

/// Entropic OT between uniform empirical measures with squared Euclidean
/// cost. Log-domain updates with epsilon scaling down to `reg`; stops when the
/// L1 row-marginal error drops below `tol`.
SinkhornResult sinkhorn_w22(const Points& X, const Points& Y, double reg, int max_iters = 5000, double tol = 1e-8);

/// Sinkhorn with the default scale-adaptive regularization.
SinkhornResult sinkhorn_w22(const Points& X, const Points& Y);

/// Normalized histogram of all pairwise distances of X, clipped to [0, clip].
Vector pairwise_distance_histogram(const Points& X, double clip, int bins = 50);

/// KL(hist(X_gt) || hist(X)) over pairwise-distance histograms.
double pairwise_kl(const Points& X_gt, const Points& X, double clip, int bins = 50);

/// Kozachenko-Leonenko entropy estimate in the ambient dimension:
/// psi(n) - psi(k) + log V_d + d/n sum log eps_{i,k}.
double kl_entropy(const Points& X, int k);

/// Fraction of feasible samples times the sum of KL estimates over ten
/// 100-point subsets for each k in {2, 4, 8}. Empty when fewer than 100
/// samples are feasible.
std::optional<double> feasible_entropy(const Points& X, const ConstraintProblem& problem, double tol, Rng& rng);

/// max_c |alpha_hat_c - alpha*_c|; samples that are not feasible to `tol` or
/// carry no component label fill an extra bucket of target mass 0.
double tv_components(const Points& X, const ConstraintProblem& problem, double tol = 1e-5);

/// Above/below bit per obstacle for an x-monotone polyline.
std::vector<bool> homotopy_signature(const Points& path, const std::vector<benchmarks::Obstacle>& obstacles);

/// Shannon entropy (nats) of the empirical distribution of signatures.
double homotopy_entropy(const std::vector<Points>& paths, const std::vector<benchmarks::Obstacle>& obstacles);

double mean_max_slack(const Points& X, const ConstraintProblem& problem);

/// V-statistic energy distance 2 E|X-Y| - E|X-X'| - E|Y-Y'|.
double energy_distance(const Points& X, const Points& Y);

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p_value = 1.0;  ///< two-sided
  double mean_difference = 0.0;  ///< mean(a) - mean(b)
  double ci_low = 0.0;   ///< 95% interval for the mean difference
  double ci_high = 0.0;
};

WelchResult welch_test(std::span<const double> a, std::span<const double> b);

// --- metric discrimination on the unit disk ------------------------------------

struct DiscriminationConfig {
  int n_trials = 200;
  int n_points = 2000;
  int n_biased = 50;
  int sinkhorn_points = 100;  ///< per-set subsample used for Sinkhorn
  int sinkhorn_max_iters = 500;
  std::uint64_t seed = 0;
};

struct MetricDiscrimination {
  std::string metric;
  double mean_reference = 0.0;  ///< D(GT1, GT2)
  double mean_center = 0.0;
  double mean_edge = 0.0;
  double p_center = 1.0;
  double p_edge = 1.0;
  WelchResult self_check;  ///< D(GT1, GT2) vs D(GT1, GT3)
};

struct DiscriminationResult {
  std::vector<MetricDiscrimination> metrics;  ///< pairwise_kl, energy_distance, sinkhorn_w22
  const MetricDiscrimination& find(const std::string& name) const;
};

Points uniform_disk(int n, double r_min, double r_max, Rng& rng);

DiscriminationResult discrimination_experiment(const DiscriminationConfig& cfg);

// --- reports -------------------------------------------------------------------

struct MetricReport {
  std::string problem;
  std::string method;
  std::uint64_t seed = 0;
  int n = 0;
  int iteration = 0;
  int kernel_steps = 0;
  std::map<std::string, double> values;

  /// One JSON object with schema_version 1; absent metrics are omitted.
  std::string to_json() const;
};

/// Names understood by evaluate(): sinkhorn, pairwise-kl, feasible-entropy,
/// tv, homotopy-entropy, slack.
std::vector<std::string> metric_names();

struct EvaluationContext {
  const ConstraintProblem* problem = nullptr;
  const Points* ground_truth = nullptr;  ///< may be null
  const benchmarks::PlanningModel* planning = nullptr;  ///< may be null
  std::uint64_t seed = 0;
};

/// Evaluates every requested metric that applies to the problem; the others
/// are skipped silently.
std::map<std::string, double> evaluate(const Points& X, const std::vector<std::string>& names,
                                       const EvaluationContext& ctx);

}  // namespace masem::metrics
