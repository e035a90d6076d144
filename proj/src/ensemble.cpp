#include "masem/ensemble.hpp"

#include "masem/parallel.hpp"

#include <algorithm>

namespace masem {

void ParticleEnsemble::refresh_slack(const ConstraintProblem& problem) {
  slack.resize(static_cast<std::size_t>(size()));
  parallel_for(static_cast<std::size_t>(size()),
               [&](std::size_t i) { slack[i] = masem::slack(position(static_cast<Eigen::Index>(i)), problem); });
}

void ParticleEnsemble::select(const std::vector<int>& indices) {
  Points next(static_cast<Eigen::Index>(indices.size()), positions.cols());
  std::vector<SlackValue> next_slack(indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    next.row(static_cast<Eigen::Index>(j)) = positions.row(indices[j]);
    next_slack[j] = slack[static_cast<std::size_t>(indices[j])];
  }
  positions = std::move(next);
  slack = std::move(next_slack);
}

ParticleEnsemble make_ensemble(const Points& positions, const ConstraintProblem& problem, std::uint64_t seed) {
  if (positions.rows() < 1) throw InputError("ensemble must hold at least one particle");
  if (positions.cols() != problem.dim) throw InputError("ensemble dimension does not match the problem");
  ParticleEnsemble e;
  e.positions = positions;
  e.streams.reserve(static_cast<std::size_t>(positions.rows()));
  for (Eigen::Index i = 0; i < positions.rows(); ++i) {
    e.streams.push_back(make_stream(seed, "kernel", static_cast<std::uint64_t>(i)));
  }
  e.refresh_slack(problem);
  return e;
}

double mean_max_violation(const ParticleEnsemble& ensemble) {
  double sum = 0.0;
  for (const auto& s : ensemble.slack) sum += s.max_violation;
  return ensemble.slack.empty() ? 0.0 : sum / static_cast<double>(ensemble.slack.size());
}

double max_max_violation(const ParticleEnsemble& ensemble) {
  double m = 0.0;
  for (const auto& s : ensemble.slack) m = std::max(m, s.max_violation);
  return m;
}

}  // namespace masem
