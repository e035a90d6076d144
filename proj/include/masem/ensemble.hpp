#pragma once

#include "masem/constraint.hpp"

#include <vector>

namespace masem {

/// N particles in ambient space with cached slack and one RNG stream per slot.
///
/// Streams belong to slots, not to particles: after resampling, copies of the
/// same particle continue with different streams.
struct ParticleEnsemble {
  Points positions;
  std::vector<SlackValue> slack;
  std::vector<Rng> streams;
  int iteration = 0;

  Eigen::Index size() const { return positions.rows(); }
  Vector position(Eigen::Index i) const { return positions.row(i).transpose(); }

  void refresh_slack(const ConstraintProblem& problem);
  /// Replace positions by the listed rows (streams stay with their slots).
  void select(const std::vector<int>& indices);
};

/// Fresh ensemble with kernel streams derived from `seed`.
ParticleEnsemble make_ensemble(const Points& positions, const ConstraintProblem& problem, std::uint64_t seed);

double mean_max_violation(const ParticleEnsemble& ensemble);
double max_max_violation(const ParticleEnsemble& ensemble);

}  // namespace masem
