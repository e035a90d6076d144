#include "masem/meanfield.hpp"

#include "masem/parallel.hpp"
#include "masem/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace masem::meanfield {

namespace {

constexpr double kFloor = 1e-300;

Vector safe_log(const Vector& v) { return v.cwiseMax(kFloor).array().log().matrix(); }

Vector normalize_log(const Vector& log_w) {
  const double top = log_w.maxCoeff();
  Vector w = (log_w.array() - top).exp();
  return w / w.sum();
}

Vector dirichlet(Rng& rng, int c) {
  Vector v(c);
  std::gamma_distribution<double> gamma(1.0, 1.0);
  for (int i = 0; i < c; ++i) v[i] = std::max(gamma(rng), 1e-300);
  return v / v.sum();
}

}  // namespace

void check_simplex(const Vector& alpha, bool strictly_positive) {
  if (alpha.size() < 1) throw InputError("component weights must be non-empty");
  for (Eigen::Index i = 0; i < alpha.size(); ++i) {
    if (!std::isfinite(alpha[i]) || alpha[i] < 0.0 || (strictly_positive && alpha[i] <= 0.0)) {
      throw InputError("component weights must be finite and " +
                       std::string(strictly_positive ? "positive" : "nonnegative"));
    }
  }
  if (std::abs(alpha.sum() - 1.0) > 1e-12) throw InputError("component weights must sum to one");
}

Vector phi_map(const Vector& alpha, const Vector& alpha_star, double beta) {
  if (alpha.size() != alpha_star.size()) throw InputError("weight vectors differ in length");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InputError("beta must lie in [0, 1]");
  return normalize_log((1.0 - beta) * safe_log(alpha) + beta * safe_log(alpha_star));
}

TiltedFamily TiltedFamily::from_initial(const Vector& alpha0, const Vector& alpha_star, double beta) {
  if (alpha0.size() != alpha_star.size()) throw InputError("weight vectors differ in length");
  if (!(beta > 0.0 && beta < 1.0)) throw InputError("beta must lie in (0, 1)");
  check_simplex(alpha_star, true);
  return TiltedFamily{alpha_star, safe_log(alpha0) - safe_log(alpha_star), beta};
}

Vector closed_form(const TiltedFamily& family, int t) {
  if (t < 0) throw InputError("iteration index must be >= 0");
  const double a = std::pow(1.0 - family.beta, t);
  return normalize_log(safe_log(family.alpha_star) + a * family.z);
}

double kl_simplex(const Vector& alpha, const Vector& alpha_star) {
  if (alpha.size() != alpha_star.size()) throw InputError("weight vectors differ in length");
  double kl = 0.0;
  for (Eigen::Index c = 0; c < alpha.size(); ++c) {
    if (alpha[c] > 0.0) kl += alpha[c] * (std::log(alpha[c]) - std::log(std::max(alpha_star[c], kFloor)));
  }
  return std::max(kl, 0.0);
}

double c0_constant(const Vector& alpha0, const Vector& alpha_star) {
  if (alpha0.size() != alpha_star.size()) throw InputError("weight vectors differ in length");
  const Vector z = safe_log(alpha0) - safe_log(alpha_star);
  const double range = z.maxCoeff() - z.minCoeff();
  return 0.25 * range * range;
}

BoundReport verify_theorem_bound(const TiltedFamily& family, int t_max) {
  if (t_max < 1) throw InputError("t_max must be >= 1");
  const double range = family.z.maxCoeff() - family.z.minCoeff();
  const double c0 = 0.25 * range * range;
  BoundReport report;
  Vector alpha = closed_form(family, 0);
  for (int t = 0; t <= t_max; ++t) {
    const double kl = kl_simplex(alpha, family.alpha_star);
    const double bound = c0 * std::pow(1.0 - family.beta, 2.0 * t);
    if (kl > bound + 1e-12) {
      report.holds = false;
      ++report.violations;
    }
    if (bound > 1e-12) report.max_ratio = std::max(report.max_ratio, kl / bound);
    alpha = phi_map(alpha, family.alpha_star, family.beta);
  }
  return report;
}

int iterations_to_eps(double c0, double beta, double eps) {
  if (!(eps > 0.0)) throw InputError("eps must be > 0");
  if (!(beta > 0.0 && beta < 1.0)) throw InputError("beta must lie in (0, 1)");
  if (!(c0 >= 0.0)) throw InputError("C0 must be >= 0");
  if (c0 <= eps) return 0;
  auto bound = [&](int t) { return c0 * std::pow(1.0 - beta, 2.0 * t); };
  int t = static_cast<int>(std::ceil(std::log(eps / c0) / (2.0 * std::log(1.0 - beta))));
  t = std::max(t, 1);
  while (bound(t) > eps) ++t;
  while (t > 0 && bound(t - 1) <= eps) --t;
  return t;
}

Extinction extinction_probability(const Vector& alpha, const Vector& alpha_star, double beta, int n) {
  if (n < 1) throw InputError("N must be >= 1");
  const Vector next = phi_map(alpha, alpha_star, beta);
  Extinction out{Vector(next.size()), Vector(next.size())};
  for (Eigen::Index c = 0; c < next.size(); ++c) {
    const double q = std::min(next[c], 1.0);
    out.probability[c] = q >= 1.0 ? 0.0 : std::exp(n * std::log1p(-q));
    out.bound[c] = std::exp(-n * q);
    if (out.probability[c] > out.bound[c] * (1.0 + 1e-12)) {
      throw NumericalError("extinction probability exceeds its exponential bound");
    }
  }
  return out;
}

SuiteReport verify_random_instances(int instances, std::uint64_t seed, int t_max, int max_components,
                                    int closed_form_horizon) {
  if (instances < 1 || max_components < 2) throw InputError("need >= 1 instance and >= 2 components");
  std::vector<BoundReport> bounds(static_cast<std::size_t>(instances));
  std::vector<double> cf_error(static_cast<std::size_t>(instances), 0.0);
  std::vector<char> monotone(static_cast<std::size_t>(instances), 1);

  parallel_for(static_cast<std::size_t>(instances), [&](std::size_t i) {
    Rng rng = make_stream(seed, "meanfield", i);
    const int c = std::uniform_int_distribution<int>(2, max_components)(rng);
    const double beta = 0.1 * std::uniform_int_distribution<int>(1, 9)(rng);
    const Vector alpha0 = dirichlet(rng, c);
    const Vector alpha_star = dirichlet(rng, c);
    const TiltedFamily family = TiltedFamily::from_initial(alpha0, alpha_star, beta);
    bounds[i] = verify_theorem_bound(family, t_max);

    Vector alpha = closed_form(family, 0);
    double previous_kl = kl_simplex(alpha, alpha_star);
    for (int t = 1; t <= closed_form_horizon; ++t) {
      alpha = phi_map(alpha, alpha_star, beta);
      cf_error[i] = std::max(cf_error[i], (alpha - closed_form(family, t)).cwiseAbs().maxCoeff());
      const double kl = kl_simplex(alpha, alpha_star);
      if (kl > previous_kl + 1e-15) monotone[i] = 0;
      previous_kl = kl;
    }
  });

  SuiteReport report;
  report.instances = instances;
  for (std::size_t i = 0; i < bounds.size(); ++i) {
    report.violations += bounds[i].violations;
    report.max_ratio = std::max(report.max_ratio, bounds[i].max_ratio);
    report.max_closed_form_error = std::max(report.max_closed_form_error, cf_error[i]);
    report.kl_monotone = report.kl_monotone && monotone[i];
  }
  return report;
}

}  // namespace masem::meanfield
