#include "masem/meanfield.hpp"

#include "masem/parallel.hpp"
#include "masem/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace masem::meanfield {

namespace {

Eigen::Vector2d uniform_in_disk(const benchmarks::DiskGrid& grid, int component, Rng& rng) {
  const double r = grid.radius * std::sqrt(uniform01(rng));
  const double phi = 2.0 * std::numbers::pi * uniform01(rng);
  return grid.center(component) + r * Eigen::Vector2d(std::cos(phi), std::sin(phi));
}

/// Component of each chain at initialization.
std::vector<int> initial_assignment(const benchmarks::DiskGrid& grid, const ComponentLossConfig& cfg, Rng& rng) {
  const int c = grid.size();
  std::vector<int> owner(static_cast<std::size_t>(cfg.n_particles));
  if (cfg.init == InitMode::Uniform) {
    for (int i = 0; i < cfg.n_particles; ++i) owner[static_cast<std::size_t>(i)] = i % c;
    return owner;
  }
  // One randomly chosen component holds a single chain; the others share the
  // remaining chains as evenly as possible.
  const int lonely = std::uniform_int_distribution<int>(0, c - 1)(rng);
  owner[0] = lonely;
  int next = 0;
  for (int i = 1; i < cfg.n_particles; ++i) {
    if (next == lonely) next = (next + 1) % c;
    owner[static_cast<std::size_t>(i)] = next;
    next = (next + 1) % c;
  }
  return owner;
}

int covered(const IterationRecord& rec) {
  return static_cast<int>(std::count_if(rec.component_counts.begin(), rec.component_counts.end(),
                                        [](int n) { return n > 0; }));
}

}  // namespace

ComponentLossResult component_loss_sim(const benchmarks::DiskGrid& grid, const ComponentLossConfig& cfg) {
  if (cfg.n_particles < 2) throw ConfigError("component loss needs N >= 2");
  if (cfg.n_trials < 1) throw ConfigError("component loss needs at least one trial");
  if (!(cfg.tau >= 0.0) || !std::isfinite(cfg.tau)) throw ConfigError("temperature must be >= 0");
  if (cfg.init == InitMode::WorstCase && cfg.n_particles < grid.size()) {
    throw ConfigError("worst-case initialization needs N >= number of components");
  }
  if (2.0 * grid.radius >= grid.spacing) throw ConfigError("disks of the grid overlap");
  const benchmarks::Benchmark bench = benchmarks::make_disk_grid(grid);
  const ConstraintProblem& problem = bench.problem;

  MasemConfig mc;
  mc.n_particles = cfg.n_particles;
  mc.n_iterations = cfg.iterations;
  mc.rejuvenation_steps = cfg.rejuvenation_steps;
  mc.k_max = cfg.k;
  mc.temperature = cfg.tau > 0.0 ? cfg.tau : 1.0;
  mc.penalty = cfg.penalty;
  mc.kernel.kind = KernelKind::NHR;
  mc.kernel.nhr_max_step = 1.0;

  const WeightRule rule = [&](const ParticleEnsemble& ens) -> Vector {
    if (cfg.tau == 0.0) return Vector::Constant(ens.size(), 1.0 / static_cast<double>(ens.size()));
    return entropy_weights(knn_radii(ens.positions, cfg.k), ens.slack, cfg.tau, cfg.penalty);
  };

  ComponentLossResult out;
  out.covered_per_trial.assign(static_cast<std::size_t>(cfg.n_trials), 0);
  out.initially_covered.assign(static_cast<std::size_t>(cfg.n_trials), 0);
  parallel_for(
      static_cast<std::size_t>(cfg.n_trials),
      [&](std::size_t trial) {
        Rng rng = make_stream(cfg.seed, "component-loss", trial);
        const std::vector<int> owner = initial_assignment(grid, cfg, rng);
        Points start(cfg.n_particles, 2);
        for (int i = 0; i < cfg.n_particles; ++i) {
          start.row(i) = uniform_in_disk(grid, owner[static_cast<std::size_t>(i)], rng).transpose();
        }
        MasemConfig trial_cfg = mc;
        trial_cfg.seed = rng();
        std::vector<int> initial(static_cast<std::size_t>(grid.size()), 0);
        for (int o : owner) initial[static_cast<std::size_t>(o)] = 1;
        out.initially_covered[trial] = std::accumulate(initial.begin(), initial.end(), 0);
        const MasemResult res = resample_from(make_ensemble(start, problem, trial_cfg.seed), problem, trial_cfg, rule);
        out.covered_per_trial[trial] = covered(res.log.back());
      },
      1);

  const auto n = static_cast<double>(cfg.n_trials);
  double sum = 0.0;
  double sum_sq = 0.0;
  out.min_covered = grid.size();
  for (int c : out.covered_per_trial) {
    sum += c;
    sum_sq += static_cast<double>(c) * c;
    out.min_covered = std::min(out.min_covered, c);
  }
  out.mean_covered = sum / n;
  const double var = cfg.n_trials > 1 ? std::max(0.0, (sum_sq - n * out.mean_covered * out.mean_covered) / (n - 1)) : 0.0;
  out.ci_half_width = 1.96 * std::sqrt(var / n);
  return out;
}

}  // namespace masem::meanfield
