#include "masem/metrics.hpp"

#include "masem/parallel.hpp"
#include "masem/resampler.hpp"

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/digamma.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace masem::metrics {

namespace {

void require_rows(const Points& X, Eigen::Index min_rows, const char* what) {
  if (X.rows() < min_rows) {
    throw InputError(std::string(what) + " needs at least " + std::to_string(min_rows) + " samples");
  }
}

void require_same_dim(const Points& X, const Points& Y) {
  if (X.cols() != Y.cols()) throw InputError("sample sets differ in dimension");
}

// exp() below this underflows into subnormals, which are very slow to compute;
// the clamped terms are at most 1e-304 each.
constexpr double kExpFloor = -700.0;

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

RowMatrix squared_distances(const Points& X, const Points& Y) {
  RowMatrix C(X.rows(), Y.rows());
  parallel_for(static_cast<std::size_t>(X.rows()), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    for (Eigen::Index j = 0; j < Y.rows(); ++j) C(i, j) = (X.row(i) - Y.row(j)).squaredNorm();
  });
  return C;
}

/// Row-wise soft-min: out_i = -eps * log sum_j exp((pot_j - C_ij)/eps + log_w).
void softmin_rows(const RowMatrix& C, const Vector& pot, double eps, double log_w, Vector& out) {
  const double inv = 1.0 / eps;
  parallel_for(static_cast<std::size_t>(C.rows()), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    const Eigen::ArrayXd z = (pot.array() - C.row(i).transpose().array()) * inv;
    const double top = z.maxCoeff();
    out[i] = -eps * (top + std::log((z - top).max(kExpFloor).exp().sum()) + log_w);
  });
}

/// L1 distance of the plan's row sums from the uniform row marginal.
double row_marginal_error(const RowMatrix& C, const Vector& f, const Vector& g, double eps, double log_a,
                          double log_b) {
  Vector err(C.rows());
  const double inv = 1.0 / eps;
  parallel_for(static_cast<std::size_t>(C.rows()), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    const double s = ((f[i] + g.array() - C.row(i).transpose().array()) * inv + log_a + log_b).max(kExpFloor).exp().sum();
    err[i] = std::abs(s - std::exp(log_a));
  });
  return err.sum();
}

double shannon_entropy(const std::vector<std::size_t>& counts) {
  const double total = static_cast<double>(std::accumulate(counts.begin(), counts.end(), std::size_t{0}));
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / total;
    h -= p * std::log(p);
  }
  return h;
}

double mean_of(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size()); }

}  // namespace

// --- Sinkhorn --------------------------------------------------------------------

double median_squared_distance(const Points& X, const Points& Y) {
  require_rows(X, 1, "median distance");
  require_rows(Y, 1, "median distance");
  require_same_dim(X, Y);
  const RowMatrix C = squared_distances(X, Y);
  std::vector<double> all(C.data(), C.data() + C.size());
  const auto mid = all.begin() + static_cast<std::ptrdiff_t>(all.size() / 2);
  std::nth_element(all.begin(), mid, all.end());
  if (all.size() % 2 == 1) return *mid;
  const double upper = *mid;
  const double lower = *std::max_element(all.begin(), mid);
  return 0.5 * (lower + upper);
}

double default_sinkhorn_reg(const Points& X, const Points& Y) {
  return std::max(1e-3 * median_squared_distance(X, Y), 1e-12);
}

SinkhornResult sinkhorn_w22(const Points& X, const Points& Y, double reg, int max_iters, double tol) {
  require_rows(X, 1, "Sinkhorn");
  require_rows(Y, 1, "Sinkhorn");
  require_same_dim(X, Y);
  if (!(reg > 0.0) || !std::isfinite(reg)) throw InputError("Sinkhorn regularization must be positive");
  if (max_iters < 1) throw InputError("Sinkhorn needs max_iters >= 1");

  const RowMatrix C = squared_distances(X, Y);
  const RowMatrix Ct = C.transpose();
  const double log_a = -std::log(static_cast<double>(X.rows()));
  const double log_b = -std::log(static_cast<double>(Y.rows()));
  Vector f = Vector::Zero(X.rows());
  Vector g = Vector::Zero(Y.rows());
  Vector f_new(X.rows());
  Vector g_new(Y.rows());

  SinkhornResult res;
  // Epsilon scaling from the cost scale down to reg; at the final scale the
  // updates are over-relaxed, falling back to plain steps if the marginal
  // error stops shrinking.
  double eps = std::max(C.maxCoeff(), reg);
  int used = 0;
  while (true) {
    const bool final_scale = eps <= reg;
    const int budget = final_scale ? max_iters - used : std::min(30, max_iters - used);
    double omega = final_scale ? 1.8 : 1.0;
    double last_error = std::numeric_limits<double>::infinity();
    for (int it = 0; it < budget; ++it) {
      softmin_rows(C, g, eps, log_b, f_new);
      f = (1.0 - omega) * f + omega * f_new;
      softmin_rows(Ct, f, eps, log_a, g_new);
      g = (1.0 - omega) * g + omega * g_new;
      ++used;
      if (final_scale && (it % 10 == 9 || used == max_iters)) {
        res.marginal_error = row_marginal_error(C, f, g, eps, log_a, log_b);
        if (res.marginal_error <= tol) {
          res.converged = true;
          break;
        }
        if (!(res.marginal_error < last_error)) omega = 1.0;
        last_error = res.marginal_error;
      }
    }
    if (final_scale || used >= max_iters) break;
    eps = std::max(eps * 0.5, reg);
  }
  const double e = std::max(eps, reg);
  // Close on a plain g-update so the column marginals are exact.
  softmin_rows(Ct, f, e, log_a, g);
  res.marginal_error = row_marginal_error(C, f, g, e, log_a, log_b);
  res.converged = res.marginal_error <= tol;
  res.iterations = used;

  Vector partial(C.rows());
  const double inv = 1.0 / e;
  parallel_for(static_cast<std::size_t>(C.rows()), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    const Eigen::ArrayXd c = C.row(i).transpose().array();
    partial[i] = (((f[i] + g.array() - c) * inv + log_a + log_b).max(kExpFloor).exp() * c).sum();
  });
  res.cost = std::max(partial.sum(), 0.0);
  return res;
}

SinkhornResult sinkhorn_w22(const Points& X, const Points& Y) { return sinkhorn_w22(X, Y, default_sinkhorn_reg(X, Y)); }

// --- pairwise distances ----------------------------------------------------------

Vector pairwise_distance_histogram(const Points& X, double clip, int bins) {
  require_rows(X, 2, "pairwise histogram");
  if (!(clip > 0.0) || !std::isfinite(clip)) throw InputError("histogram clip must be positive");
  if (bins < 1) throw InputError("histogram needs >= 1 bin");
  const Eigen::Index n = X.rows();
  Matrix per_row = Matrix::Zero(n, bins);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = std::min((X.row(i) - X.row(j)).norm(), clip);
      const int b = std::min(static_cast<int>(d / clip * bins), bins - 1);
      per_row(i, b) += 1.0;
    }
  });
  Vector hist = per_row.colwise().sum().transpose();
  return hist / hist.sum();
}

double pairwise_kl(const Points& X_gt, const Points& X, double clip, int bins) {
  require_same_dim(X_gt, X);
  const Vector p = pairwise_distance_histogram(X_gt, clip, bins);
  Vector q = pairwise_distance_histogram(X, clip, bins);
  q = (q.array() + 1e-12).matrix();
  q /= q.sum();
  double kl = 0.0;
  for (int b = 0; b < bins; ++b) {
    if (p[b] > 0.0) kl += p[b] * std::log(p[b] / q[b]);
  }
  return std::max(kl, 0.0);
}

// --- entropy ----------------------------------------------------------------------

double kl_entropy(const Points& X, int k) {
  const Eigen::Index n = X.rows();
  const auto d = static_cast<int>(X.cols());
  const KnnRadii radii = knn_radii(X, k);
  double log_sum = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) log_sum += std::log(radii.eps(i, k - 1));
  const auto nd = static_cast<double>(n);
  return boost::math::digamma(nd) - boost::math::digamma(static_cast<double>(k)) + std::log(unit_ball_volume(d)) +
         d / nd * log_sum;
}

std::optional<double> feasible_entropy(const Points& X, const ConstraintProblem& problem, double tol, Rng& rng) {
  constexpr int subset = 100;
  constexpr int repeats = 10;
  std::vector<Eigen::Index> feasible;
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    if (is_feasible(X.row(i).transpose(), problem, tol)) feasible.push_back(i);
  }
  if (static_cast<int>(feasible.size()) < subset) return std::nullopt;
  const double fraction = static_cast<double>(feasible.size()) / static_cast<double>(X.rows());

  double total = 0.0;
  for (int k : {2, 4, 8}) {
    for (int r = 0; r < repeats; ++r) {
      std::vector<Eigen::Index> pick;
      pick.reserve(subset);
      std::sample(feasible.begin(), feasible.end(), std::back_inserter(pick), subset, rng);
      Points sub(subset, X.cols());
      for (int i = 0; i < subset; ++i) sub.row(i) = X.row(pick[static_cast<std::size_t>(i)]);
      total += kl_entropy(sub, k);
    }
  }
  return fraction * total;
}

// --- components -------------------------------------------------------------------

double tv_components(const Points& X, const ConstraintProblem& problem, double tol) {
  if (X.rows() == 0) throw InputError("TV needs at least one sample");
  if (!problem.component_of || problem.component_masses.size() == 0) {
    throw UnsupportedError("problem '" + problem.name + "' has no component labels");
  }
  const Eigen::Index c = problem.component_masses.size();
  Vector counts = Vector::Zero(c + 1);  // last bucket: infeasible or unlabeled
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Vector x = X.row(i).transpose();
    int label = -1;
    if (is_feasible(x, problem, tol)) label = problem.component_of(x);
    counts[(label >= 0 && label < c) ? label : c] += 1.0;
  }
  counts /= static_cast<double>(X.rows());
  Vector target = Vector::Zero(c + 1);
  target.head(c) = problem.component_masses;
  return (counts - target).cwiseAbs().maxCoeff();
}

std::vector<bool> homotopy_signature(const Points& path, const std::vector<benchmarks::Obstacle>& obstacles) {
  if (path.rows() < 1 || path.cols() != 2) throw InputError("paths must be n x 2 with n >= 1");
  std::vector<bool> bits;
  bits.reserve(obstacles.size());
  const Eigen::Index last = path.rows() - 1;
  for (const auto& o : obstacles) {
    const double cx = o.center.x();
    double y;
    if (cx <= path(0, 0)) {
      y = path(0, 1);
    } else if (cx >= path(last, 0)) {
      y = path(last, 1);
    } else {
      y = path(last, 1);
      for (Eigen::Index t = 0; t < last; ++t) {
        const double x0 = path(t, 0);
        const double x1 = path(t + 1, 0);
        if (cx >= std::min(x0, x1) && cx <= std::max(x0, x1)) {
          const double s = x1 != x0 ? (cx - x0) / (x1 - x0) : 0.0;
          y = path(t, 1) + s * (path(t + 1, 1) - path(t, 1));
          break;
        }
      }
    }
    bits.push_back(y > o.center.y());
  }
  return bits;
}

double homotopy_entropy(const std::vector<Points>& paths, const std::vector<benchmarks::Obstacle>& obstacles) {
  if (paths.empty()) throw InputError("homotopy entropy needs at least one path");
  std::map<std::vector<bool>, std::size_t> classes;
  for (const auto& p : paths) ++classes[homotopy_signature(p, obstacles)];
  std::vector<std::size_t> counts;
  for (const auto& [sig, count] : classes) counts.push_back(count);
  return shannon_entropy(counts);
}

double mean_max_slack(const Points& X, const ConstraintProblem& problem) {
  if (X.rows() == 0) throw InputError("slack needs at least one sample");
  Vector v(X.rows());
  parallel_for(static_cast<std::size_t>(X.rows()), [&](std::size_t iu) {
    const auto i = static_cast<Eigen::Index>(iu);
    v[i] = slack(X.row(i).transpose(), problem).max_violation;
  });
  return v.mean();
}

double energy_distance(const Points& X, const Points& Y) {
  require_rows(X, 1, "energy distance");
  require_rows(Y, 1, "energy distance");
  require_same_dim(X, Y);
  auto mean_dist = [](const Points& A, const Points& B) {
    Vector row(A.rows());
    parallel_for(static_cast<std::size_t>(A.rows()), [&](std::size_t iu) {
      const auto i = static_cast<Eigen::Index>(iu);
      double s = 0.0;
      for (Eigen::Index j = 0; j < B.rows(); ++j) s += (A.row(i) - B.row(j)).norm();
      row[i] = s;
    });
    return row.sum() / (static_cast<double>(A.rows()) * static_cast<double>(B.rows()));
  };
  return 2.0 * mean_dist(X, Y) - mean_dist(X, X) - mean_dist(Y, Y);
}

// --- statistics -------------------------------------------------------------------

WelchResult welch_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 2 || b.size() < 2) throw InputError("Welch test needs at least two samples per group");
  auto moments = [](std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::pair<double, double>(mean, ss / (n - 1.0));
  };
  const auto [ma, va] = moments(a);
  const auto [mb, vb] = moments(b);
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  const double sa = va / na;
  const double sb = vb / nb;
  const double se2 = sa + sb;

  WelchResult r;
  r.mean_difference = ma - mb;
  if (se2 == 0.0) {
    r.t = r.mean_difference == 0.0 ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), r.mean_difference);
    r.df = na + nb - 2.0;
    r.p_value = r.mean_difference == 0.0 ? 1.0 : 0.0;
    r.ci_low = r.ci_high = r.mean_difference;
    return r;
  }
  const double se = std::sqrt(se2);
  r.t = r.mean_difference / se;
  r.df = se2 * se2 / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
  const boost::math::students_t dist(r.df);
  r.p_value = std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t))));
  const double q = boost::math::quantile(boost::math::complement(dist, 0.025));
  r.ci_low = r.mean_difference - q * se;
  r.ci_high = r.mean_difference + q * se;
  return r;
}

// --- discrimination ---------------------------------------------------------------

const MetricDiscrimination& DiscriminationResult::find(const std::string& name) const {
  for (const auto& m : metrics) {
    if (m.metric == name) return m;
  }
  throw InputError("no discrimination result for metric '" + name + "'");
}

Points uniform_disk(int n, double r_min, double r_max, Rng& rng) {
  if (n < 0 || !(r_min >= 0.0 && r_max > r_min)) throw InputError("invalid disk sampling request");
  Points out(n, 2);
  for (int i = 0; i < n; ++i) {
    const double r = std::sqrt(r_min * r_min + uniform01(rng) * (r_max * r_max - r_min * r_min));
    const double phi = 2.0 * std::numbers::pi * uniform01(rng);
    out.row(i) << r * std::cos(phi), r * std::sin(phi);
  }
  return out;
}

DiscriminationResult discrimination_experiment(const DiscriminationConfig& cfg) {
  if (cfg.n_trials < 2) throw ConfigError("discrimination needs at least two trials");
  if (cfg.n_points < 2 || cfg.n_biased < 0 || cfg.n_biased > cfg.n_points) throw ConfigError("invalid point counts");
  if (cfg.sinkhorn_points < 1 || cfg.sinkhorn_points > cfg.n_points) throw ConfigError("invalid Sinkhorn subsample");

  constexpr int kMetrics = 3;
  constexpr int kPairs = 4;  // reference, center, edge, second reference
  const auto trials = static_cast<std::size_t>(cfg.n_trials);
  std::vector<std::array<std::array<double, kPairs>, kMetrics>> values(trials);
  const double clip = 2.0;

  parallel_for(
      trials,
      [&](std::size_t trial) {
        Rng rng = make_stream(cfg.seed, "discrimination", trial);
        const Points gt1 = uniform_disk(cfg.n_points, 0.0, 1.0, rng);
        const Points gt2 = uniform_disk(cfg.n_points, 0.0, 1.0, rng);
        const Points gt3 = uniform_disk(cfg.n_points, 0.0, 1.0, rng);
        Points center = gt2;
        Points edge = gt2;
        center.topRows(cfg.n_biased) = uniform_disk(cfg.n_biased, 0.0, 0.5, rng);
        edge.topRows(cfg.n_biased) = uniform_disk(cfg.n_biased, 0.5, 1.0, rng);
        const std::array<const Points*, kPairs> others{&gt2, &center, &edge, &gt3};
        const int s = cfg.sinkhorn_points;
        // The biased rows sit on top; subsample with a stride so they keep
        // their share.
        auto thin = [&](const Points& P) {
          Points out(s, 2);
          for (int i = 0; i < s; ++i) out.row(i) = P.row(static_cast<Eigen::Index>(i) * cfg.n_points / s);
          return out;
        };
        const Points gt1_thin = thin(gt1);
        for (int p = 0; p < kPairs; ++p) {
          values[trial][0][static_cast<std::size_t>(p)] = pairwise_kl(gt1, *others[static_cast<std::size_t>(p)], clip);
          values[trial][1][static_cast<std::size_t>(p)] = energy_distance(gt1, *others[static_cast<std::size_t>(p)]);
          values[trial][2][static_cast<std::size_t>(p)] =
              sinkhorn_w22(gt1_thin, thin(*others[static_cast<std::size_t>(p)]), default_sinkhorn_reg(gt1_thin, gt1_thin),
                           cfg.sinkhorn_max_iters)
                  .cost;
        }
      },
      1);

  DiscriminationResult result;
  const std::array<std::string, kMetrics> names{"pairwise_kl", "energy_distance", "sinkhorn_w22"};
  for (int m = 0; m < kMetrics; ++m) {
    std::array<std::vector<double>, kPairs> series;
    for (std::size_t t = 0; t < trials; ++t) {
      for (int p = 0; p < kPairs; ++p) {
        series[static_cast<std::size_t>(p)].push_back(values[t][static_cast<std::size_t>(m)][static_cast<std::size_t>(p)]);
      }
    }
    MetricDiscrimination md;
    md.metric = names[static_cast<std::size_t>(m)];
    md.mean_reference = mean_of(series[0]);
    md.mean_center = mean_of(series[1]);
    md.mean_edge = mean_of(series[2]);
    md.p_center = welch_test(series[0], series[1]).p_value;
    md.p_edge = welch_test(series[0], series[2]).p_value;
    md.self_check = welch_test(series[0], series[3]);
    result.metrics.push_back(md);
  }
  return result;
}

// --- reports ----------------------------------------------------------------------

std::string MetricReport::to_json() const {
  nlohmann::ordered_json j;
  j["schema_version"] = 1;
  j["problem"] = problem;
  j["method"] = method;
  j["seed"] = seed;
  j["n"] = n;
  j["iteration"] = iteration;
  j["kernel_steps"] = kernel_steps;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [name, value] : values) {
    if (std::isfinite(value)) {
      m[name] = value;
    } else {
      m[name] = value > 0 ? "inf" : (value < 0 ? "-inf" : "nan");
    }
  }
  j["metrics"] = m;
  return j.dump();
}

std::vector<std::string> metric_names() {
  return {"sinkhorn", "pairwise-kl", "feasible-entropy", "tv", "homotopy-entropy", "slack"};
}

std::map<std::string, double> evaluate(const Points& X, const std::vector<std::string>& names,
                                       const EvaluationContext& ctx) {
  if (!ctx.problem) throw InputError("evaluation needs a problem");
  const ConstraintProblem& problem = *ctx.problem;
  std::map<std::string, double> out;
  for (const auto& name : names) {
    if (name == "sinkhorn") {
      if (ctx.ground_truth) out["sinkhorn_w22"] = sinkhorn_w22(*ctx.ground_truth, X).cost;
    } else if (name == "pairwise-kl") {
      if (ctx.ground_truth && problem.kl_clip) out["pairwise_kl"] = pairwise_kl(*ctx.ground_truth, X, *problem.kl_clip);
    } else if (name == "feasible-entropy") {
      Rng rng = make_stream(ctx.seed, "metrics");
      if (const auto h = feasible_entropy(X, problem, 1e-5, rng)) out["feasible_entropy"] = *h;
    } else if (name == "tv") {
      if (problem.component_of && problem.component_masses.size() > 0) out["tv_components"] = tv_components(X, problem);
    } else if (name == "homotopy-entropy") {
      if (ctx.planning) {
        std::vector<Points> paths;
        paths.reserve(static_cast<std::size_t>(X.rows()));
        for (Eigen::Index i = 0; i < X.rows(); ++i) paths.push_back(ctx.planning->path(X.row(i).transpose()));
        out["homotopy_entropy"] = homotopy_entropy(paths, ctx.planning->obstacles());
      }
    } else if (name == "slack") {
      out["mean_max_slack"] = mean_max_slack(X, problem);
    } else {
      throw InputError("unknown metric '" + name + "'");
    }
  }
  return out;
}

}  // namespace masem::metrics
