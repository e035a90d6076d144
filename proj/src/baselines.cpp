#include "masem/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace masem {

namespace {

struct DisjointSets {
  std::vector<int> parent;
  explicit DisjointSets(int n) : parent(static_cast<std::size_t>(n)) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[static_cast<std::size_t>(std::max(a, b))] = std::min(a, b);
  }
};

}  // namespace

void ClusterConfig::validate() const {
  if (!(linkage_radius > 0.0) || !std::isfinite(linkage_radius)) throw ConfigError("linkage radius must be > 0");
  if (resample_every < 1) throw ConfigError("resample_every must be >= 1");
  if (volume_k < 1) throw ConfigError("volume_k must be >= 1");
}

std::vector<int> cluster_particles(const Points& positions, double linkage_radius) {
  const auto n = static_cast<int>(positions.rows());
  if (n < 1) throw InputError("clustering needs at least one particle");
  if (!(linkage_radius >= 0.0)) throw InputError("linkage radius must be >= 0");
  // Sort along the first axis; only pairs within the radius on that axis can link.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return positions(a, 0) < positions(b, 0); });
  const double r2 = linkage_radius * linkage_radius;
  DisjointSets sets(n);
  for (int a = 0; a < n; ++a) {
    const int i = order[static_cast<std::size_t>(a)];
    for (int b = a + 1; b < n; ++b) {
      const int j = order[static_cast<std::size_t>(b)];
      if (positions(j, 0) - positions(i, 0) > linkage_radius) break;
      if ((positions.row(i) - positions.row(j)).squaredNorm() <= r2) sets.unite(i, j);
    }
  }
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<int> root_label(static_cast<std::size_t>(n), -1);
  int next = 0;
  for (int i = 0; i < n; ++i) {
    const int root = sets.find(i);
    if (root_label[static_cast<std::size_t>(root)] < 0) root_label[static_cast<std::size_t>(root)] = next++;
    label[static_cast<std::size_t>(i)] = root_label[static_cast<std::size_t>(root)];
  }
  return label;
}

Vector cluster_weights(const Points& positions, std::span<const SlackValue> slack, const ClusterConfig& cluster,
                       int intrinsic_dim, double mu) {
  cluster.validate();
  const Eigen::Index n = positions.rows();
  if (static_cast<Eigen::Index>(slack.size()) != n) throw InputError("slack count does not match positions");
  if (intrinsic_dim < 1) throw ConfigError("cluster volumes need an intrinsic dimension >= 1");
  const std::vector<int> label = cluster_particles(positions, cluster.linkage_radius);
  const int n_clusters = *std::max_element(label.begin(), label.end()) + 1;
  const KnnRadii radii = knn_radii(positions, std::min<int>(cluster.volume_k, static_cast<int>(n) - 1));
  const int k = static_cast<int>(radii.k());
  const double vp = unit_ball_volume(intrinsic_dim);

  // V_c = n_c * mean over members of V_p eps^p / k: the inverse kNN density
  // (up to the global 1/N factor) averaged over the cluster.
  std::vector<double> volume_sum(static_cast<std::size_t>(n_clusters), 0.0);
  std::vector<int> members(static_cast<std::size_t>(n_clusters), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(label[static_cast<std::size_t>(i)]);
    volume_sum[c] += vp * std::pow(radii.eps(i, k - 1), intrinsic_dim) / k;
    ++members[c];
  }
  Vector log_w(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<std::size_t>(label[static_cast<std::size_t>(i)]);
    // V_c / n_c = mean member volume.
    const double share = volume_sum[c] / members[c];
    log_w[i] = (share > 0.0 ? std::log(share) : -1e300) - mu * slack[static_cast<std::size_t>(i)].value;
  }
  const double top = log_w.maxCoeff();
  Vector w = (log_w.array() - top).exp();
  if (!(w.sum() > 0.0)) return Vector::Constant(n, 1.0 / static_cast<double>(n));
  return w / w.sum();
}

MasemResult cluster_nhr_run(const ConstraintProblem& problem, const MasemConfig& cfg, const ClusterConfig& cluster,
                            const IterationCallback& on_iteration) {
  cluster.validate();
  if (!problem.intrinsic_dim_hint) {
    throw ConfigError("cluster-nhr needs the problem's intrinsic dimension (intrinsic_dim_hint)");
  }
  const int p = *problem.intrinsic_dim_hint;
  int round = 0;
  const WeightRule rule = [&](const ParticleEnsemble& ens) -> Vector {
    ++round;
    if (round % cluster.resample_every != 0) return Vector::Constant(ens.size(), 1.0 / static_cast<double>(ens.size()));
    return cluster_weights(ens.positions, ens.slack, cluster, p, cfg.penalty);
  };
  return run_resampling_loop(problem, cfg, rule, on_iteration);
}

}  // namespace masem
