#pragma once

#include "masem/kernels.hpp"

#include <functional>
#include <span>
#include <vector>

namespace masem {

/// eps(i, j) is the distance from particle i to its (j+1)-th nearest
/// neighbour among the other particles. Rows are non-decreasing.
struct KnnRadii {
  Matrix eps;

  Eigen::Index n() const { return eps.rows(); }
  Eigen::Index k() const { return eps.cols(); }
};

/// Exact k-nearest-neighbour distances (self excluded).
///
/// Uses a sort-and-sweep along the axis of largest spread, pruning candidates
/// whose axis gap already exceeds the current k-th distance; the result is
/// identical to the brute-force pairwise scan.
KnnRadii knn_radii(const Points& positions, int k);

/// Volume of the unit ball in R^p.
double unit_ball_volume(int p);

/// k / (N V_p eps_k^p) per particle; +inf for a zero radius.
Vector knn_density(const KnnRadii& radii, int k, int p);

/// Normalized resampling weights: mean of the first k radii raised to tau,
/// damped by exp(-mu * slack). Falls back to uniform weights if every
/// unnormalized weight vanishes.
Vector entropy_weights(const KnnRadii& radii, std::span<const SlackValue> slack, double tau, double mu);

/// Systematic resampling: one offset u ~ U[0, 1/n_out) and strata u + j/n_out.
std::vector<int> systematic_resample(const Vector& weights, int n_out, Rng& rng);

/// Effective sample size 1 / sum w^2 of normalized weights.
double effective_sample_size(const Vector& weights);

struct MasemConfig {
  int n_particles = 2000;
  int n_iterations = 10;       ///< T
  int rejuvenation_steps = 50; ///< M
  int k_max = 4;
  double temperature = 1.0;    ///< tau
  double penalty = 1000.0;     ///< mu
  KernelConfig kernel;
  ProjectionConfig projection;
  std::uint64_t seed = 0;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;      ///< 0 = rejuvenated initialization
  int kernel_steps = 0;   ///< cumulative kernel applications
  double mean_slack = 0.0;
  double max_slack = 0.0;
  double ess = 0.0;
  std::vector<int> component_counts;  ///< empty unless the problem labels components
  int unassigned = 0;
};

struct MasemResult {
  ParticleEnsemble ensemble;
  std::vector<IterationRecord> log;
};

using IterationCallback = std::function<void(const IterationRecord&, const ParticleEnsemble&)>;
using WeightRule = std::function<Vector(const ParticleEnsemble&)>;

/// Initialize, rejuvenate, then T rounds of {weights, resample, M kernel steps}.
/// The weight rule is the only difference between MASEM and the clustering
/// baseline.
MasemResult run_resampling_loop(const ConstraintProblem& problem, const MasemConfig& cfg, const WeightRule& rule,
                                const IterationCallback& on_iteration = {});

/// Same loop starting from a caller-supplied ensemble instead of the
/// projected Gaussian initialization.
MasemResult resample_from(ParticleEnsemble ensemble, const ConstraintProblem& problem, const MasemConfig& cfg,
                          const WeightRule& rule, const IterationCallback& on_iteration = {});

MasemResult masem_run(const ConstraintProblem& problem, const MasemConfig& cfg,
                      const IterationCallback& on_iteration = {});

/// Per-component particle counts (labels from problem.component_of).
IterationRecord summarize(const ParticleEnsemble& ensemble, const ConstraintProblem& problem);

}  // namespace masem
