#pragma once

#include "masem/resampler.hpp"

#include <vector>

namespace masem {

struct ClusterConfig {
  double linkage_radius = 2.0;  ///< default: 2 x nhr_max_step
  int resample_every = 1;
  int volume_k = 4;

  void validate() const;
};

/// Single-linkage labels: i and j share a label iff a chain of hops of
/// length <= linkage_radius joins them. Labels are numbered in order of the
/// smallest member index.
std::vector<int> cluster_particles(const Points& positions, double linkage_radius);

/// Resampling weights of the clustering baseline: every cluster gets mass
/// proportional to its estimated volume, split evenly among its members, then
/// damped by exp(-mu * slack) like the entropy weights.
Vector cluster_weights(const Points& positions, std::span<const SlackValue> slack, const ClusterConfig& cluster,
                       int intrinsic_dim, double mu);

/// Same loop as masem_run with cluster-volume weights. Rounds that are not a
/// multiple of resample_every use uniform weights.
MasemResult cluster_nhr_run(const ConstraintProblem& problem, const MasemConfig& cfg, const ClusterConfig& cluster,
                            const IterationCallback& on_iteration = {});

}  // namespace masem
