#include "masem/resampler.hpp"

#include "masem/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <queue>

namespace masem {

KnnRadii knn_radii(const Points& positions, int k) {
  const Eigen::Index n = positions.rows();
  if (k < 1 || k > n - 1) {
    throw InputError("k must satisfy 1 <= k <= N-1 (k=" + std::to_string(k) + ", N=" + std::to_string(n) + ")");
  }

  // Sweep axis: the coordinate with the largest variance.
  Eigen::Index axis = 0;
  {
    const Eigen::RowVectorXd mean = positions.colwise().mean();
    const Eigen::RowVectorXd var = (positions.rowwise() - mean).array().square().colwise().sum();
    var.maxCoeff(&axis);
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return positions(a, axis) < positions(b, axis); });
  std::vector<Eigen::Index> rank(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;

  KnnRadii out;
  out.eps.resize(n, k);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    const double xi = positions(i, axis);
    std::priority_queue<double> best;  // squared distances, max on top
    auto offer = [&](Eigen::Index j) {
      const double d2 = (positions.row(i) - positions.row(j)).squaredNorm();
      if (static_cast<int>(best.size()) < k) {
        best.push(d2);
      } else if (d2 < best.top()) {
        best.pop();
        best.push(d2);
      }
    };
    Eigen::Index left = rank[iu] - 1;
    Eigen::Index right = rank[iu] + 1;
    constexpr double inf = std::numeric_limits<double>::infinity();
    while (true) {
      const double gap_left = left >= 0 ? xi - positions(order[static_cast<std::size_t>(left)], axis) : inf;
      const double gap_right = right < n ? positions(order[static_cast<std::size_t>(right)], axis) - xi : inf;
      const double gap = std::min(gap_left, gap_right);
      if (gap == inf) break;
      if (static_cast<int>(best.size()) == k && gap * gap >= best.top()) break;
      if (gap_left <= gap_right) {
        offer(order[static_cast<std::size_t>(left--)]);
      } else {
        offer(order[static_cast<std::size_t>(right++)]);
      }
    }
    for (int j = k - 1; j >= 0; --j) {
      out.eps(i, j) = std::sqrt(best.top());
      best.pop();
    }
  });
  return out;
}

double unit_ball_volume(int p) {
  if (p < 1) throw InputError("ball dimension must be >= 1");
  const double half = 0.5 * p;
  return std::exp(half * std::log(std::numbers::pi) - std::lgamma(half + 1.0));
}

Vector knn_density(const KnnRadii& radii, int k, int p) {
  if (k < 1 || k > radii.k()) throw InputError("k exceeds the computed neighbour count");
  const double vp = unit_ball_volume(p);
  const auto n = static_cast<double>(radii.n());
  Vector rho(radii.n());
  for (Eigen::Index i = 0; i < radii.n(); ++i) {
    const double r = radii.eps(i, k - 1);
    rho[i] = r == 0.0 ? std::numeric_limits<double>::infinity() : k / (n * vp * std::pow(r, p));
  }
  return rho;
}

Vector entropy_weights(const KnnRadii& radii, std::span<const SlackValue> slack, double tau, double mu) {
  const Eigen::Index n = radii.n();
  if (static_cast<Eigen::Index>(slack.size()) != n) throw InputError("slack count does not match radii");
  if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("temperature must be positive and finite");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw InputError("penalty must be nonnegative and finite");
  if (!radii.eps.allFinite()) throw InputError("radii must be finite");

  Vector log_w(n);
  constexpr double neg_inf = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = slack[static_cast<std::size_t>(i)].value;
    if (!std::isfinite(s)) throw InputError("slack values must be finite");
    const double mean_radius = radii.eps.row(i).mean();
    log_w[i] = mean_radius > 0.0 ? tau * std::log(mean_radius) - mu * s : neg_inf;
  }
  const double top = log_w.maxCoeff();
  if (top == neg_inf) return Vector::Constant(n, 1.0 / static_cast<double>(n));
  Vector w = (log_w.array() - top).exp();
  return w / w.sum();
}

std::vector<int> systematic_resample(const Vector& weights, int n_out, Rng& rng) {
  if (n_out < 1) throw InputError("resample size must be >= 1");
  const Eigen::Index n = weights.size();
  if (n < 1) throw InputError("cannot resample from an empty weight vector");
  std::vector<double> cumulative(static_cast<std::size_t>(n));
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) throw InputError("weights must be finite and nonnegative");
    total += weights[i];
    cumulative[static_cast<std::size_t>(i)] = total;
  }
  if (!(total > 0.0)) throw InputError("weights sum to zero");

  const double spacing = 1.0 / n_out;
  const double offset = uniform01(rng) * spacing;
  std::vector<int> picks(static_cast<std::size_t>(n_out));
  Eigen::Index idx = 0;
  for (int j = 0; j < n_out; ++j) {
    const double point = (offset + j * spacing) * total;
    while (idx < n - 1 && point >= cumulative[static_cast<std::size_t>(idx)]) ++idx;
    picks[static_cast<std::size_t>(j)] = static_cast<int>(idx);
  }
  return picks;
}

double effective_sample_size(const Vector& weights) {
  const double s = weights.sum();
  return s * s / weights.squaredNorm();
}

void MasemConfig::validate() const {
  if (n_particles < 2) throw ConfigError("MASEM needs N >= 2");
  if (k_max < 1 || k_max > n_particles - 1) throw ConfigError("k must satisfy 1 <= k <= N-1");
  if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
  if (!(penalty >= 0.0)) throw ConfigError("penalty must be >= 0");
  if (rejuvenation_steps < 1) throw ConfigError("rejuvenation steps M must be >= 1");
  if (n_iterations < 0) throw ConfigError("iteration count T must be >= 0");
  kernel.validate();
  projection.validate();
}

IterationRecord summarize(const ParticleEnsemble& ensemble, const ConstraintProblem& problem) {
  IterationRecord rec;
  rec.iteration = ensemble.iteration;
  rec.mean_slack = mean_max_violation(ensemble);
  rec.max_slack = max_max_violation(ensemble);
  rec.ess = static_cast<double>(ensemble.size());
  if (problem.component_of) {
    std::vector<int> counts(static_cast<std::size_t>(problem.component_masses.size()), 0);
    for (Eigen::Index i = 0; i < ensemble.size(); ++i) {
      const int c = problem.component_of(ensemble.position(i));
      if (c < 0) {
        ++rec.unassigned;
        continue;
      }
      if (static_cast<std::size_t>(c) >= counts.size()) counts.resize(static_cast<std::size_t>(c) + 1, 0);
      ++counts[static_cast<std::size_t>(c)];
    }
    rec.component_counts = std::move(counts);
  }
  return rec;
}

MasemResult resample_from(ParticleEnsemble ensemble, const ConstraintProblem& problem, const MasemConfig& cfg,
                          const WeightRule& rule, const IterationCallback& on_iteration) {
  cfg.validate();
  problem.validate();
  if (ensemble.size() != cfg.n_particles) throw InputError("ensemble size does not match N");
  MasemResult result{std::move(ensemble), {}};
  ParticleEnsemble& ens = result.ensemble;
  int steps = 0;
  auto rejuvenate = [&] {
    for (int m = 0; m < cfg.rejuvenation_steps; ++m) kernel_step(ens, problem, cfg.kernel);
    steps += cfg.rejuvenation_steps;
  };
  auto record = [&](double ess) {
    IterationRecord rec = summarize(ens, problem);
    rec.kernel_steps = steps;
    rec.ess = ess;
    result.log.push_back(rec);
    if (on_iteration) on_iteration(result.log.back(), ens);
  };

  rejuvenate();
  record(static_cast<double>(cfg.n_particles));

  Rng resample_rng = make_stream(cfg.seed, "resample");
  for (int t = 1; t <= cfg.n_iterations; ++t) {
    const Vector w = rule(ens);
    const double ess = effective_sample_size(w);
    ens.select(systematic_resample(w, cfg.n_particles, resample_rng));
    rejuvenate();
    ens.iteration = t;
    record(ess);
  }
  return result;
}

MasemResult run_resampling_loop(const ConstraintProblem& problem, const MasemConfig& cfg, const WeightRule& rule,
                                const IterationCallback& on_iteration) {
  cfg.validate();
  problem.validate();
  return resample_from(initialize_ensemble(problem, cfg.n_particles, cfg.seed, cfg.projection), problem, cfg, rule,
                       on_iteration);
}

MasemResult masem_run(const ConstraintProblem& problem, const MasemConfig& cfg, const IterationCallback& on_iteration) {
  const WeightRule entropy_rule = [&](const ParticleEnsemble& ens) {
    return entropy_weights(knn_radii(ens.positions, cfg.k_max), ens.slack, cfg.temperature, cfg.penalty);
  };
  return run_resampling_loop(problem, cfg, entropy_rule, on_iteration);
}

}  // namespace masem
