#include "masem/benchmarks.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <limits>
#include <numbers>

namespace masem::benchmarks {

namespace {

constexpr double kPi = std::numbers::pi;

Vector constant_bounds(int d, double value) { return Vector::Constant(d, value); }

/// Infinity-norm diameter of a point cloud.
double linf_diameter(const Points& pts) {
  return (pts.colwise().maxCoeff() - pts.colwise().minCoeff()).maxCoeff();
}

template <class Draw>
Points rejection_fill(std::size_t n, int dim, Draw&& draw) {
  Points out(static_cast<Eigen::Index>(n), dim);
  std::size_t filled = 0;
  while (filled < n) {
    Vector x;
    if (draw(x)) out.row(static_cast<Eigen::Index>(filled++)) = x.transpose();
  }
  return out;
}

double softplus(double v) { return v > 30.0 ? v : std::log1p(std::exp(v)); }
double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// --- disks ---------------------------------------------------------------

constexpr double kSphereRadius = 2.5;
constexpr std::array<double, 2> kCapRadius{0.2, 0.6};

struct DiskGeometry {
  std::array<Eigen::Vector3d, 2> mu;
  std::array<Eigen::Vector3d, 2> e1;
  std::array<Eigen::Vector3d, 2> e2;
};

DiskGeometry disk_geometry(double separation) {
  const double t = std::sqrt(0.5);
  Eigen::Matrix3d rx;
  rx << 1, 0, 0, 0, t, -t, 0, t, t;
  DiskGeometry geo;
  geo.mu[0] = rx * Eigen::Vector3d(std::cos(-separation / 2), std::sin(-separation / 2), 0.0);
  geo.mu[1] = rx * Eigen::Vector3d(std::cos(separation / 2), std::sin(separation / 2), 0.0);
  for (int i = 0; i < 2; ++i) {
    const Eigen::Vector3d& m = geo.mu[static_cast<std::size_t>(i)];
    Eigen::Index axis;
    m.cwiseAbs().minCoeff(&axis);
    Eigen::Vector3d helper = Eigen::Vector3d::Zero();
    helper[axis] = 1.0;
    geo.e1[static_cast<std::size_t>(i)] = m.cross(helper).normalized();
    geo.e2[static_cast<std::size_t>(i)] = m.cross(geo.e1[static_cast<std::size_t>(i)]).normalized();
  }
  return geo;
}

double cap_slack(const DiskGeometry& geo, int i, const Eigen::Vector3d& x) {
  return std::cos(kCapRadius[static_cast<std::size_t>(i)]) - x.dot(geo.mu[static_cast<std::size_t>(i)]) / kSphereRadius;
}

// --- swiss roll ----------------------------------------------------------

struct SwissRollLayout {
  std::vector<Eigen::Vector2d> centers;
  std::vector<double> radii;
  Eigen::Vector2d spiral_center{4.8, -0.4};
  double a = 0.45;
  double b = 0.33;
  double t_min = 0.9;
  double t_max = 3.9 * kPi;
};

SwissRollLayout swiss_roll_layout(std::uint64_t seed) {
  SwissRollLayout lay;
  Rng rng = make_stream(seed, "swiss-roll-layout");
  const double spiral_extent = lay.a + lay.b * lay.t_max;
  int attempts = 0;
  while (lay.centers.size() < 6) {
    if (++attempts > 1000000) throw ConfigError("swiss-roll layout rejection sampling failed");
    const double r = std::uniform_real_distribution<double>(0.45, 1.15)(rng);
    const Eigen::Vector2d c(std::uniform_real_distribution<double>(-9.5 + r, 9.5 - r)(rng),
                            std::uniform_real_distribution<double>(-9.5 + r, 9.5 - r)(rng));
    if ((c - lay.spiral_center).norm() < spiral_extent + r + 0.3) continue;
    bool clear = true;
    for (std::size_t j = 0; j < lay.centers.size(); ++j) {
      if ((c - lay.centers[j]).norm() < r + lay.radii[j] + 0.3) clear = false;
    }
    if (!clear) continue;
    lay.centers.push_back(c);
    lay.radii.push_back(r);
  }
  return lay;
}

struct BranchResidual {
  double value = std::numeric_limits<double>::infinity();
  Eigen::Vector2d gradient = Eigen::Vector2d::Zero();
};

BranchResidual swiss_roll_residual(const SwissRollLayout& lay, const Eigen::Vector2d& x) {
  BranchResidual best;
  for (std::size_t k = 0; k < lay.centers.size(); ++k) {
    const Eigen::Vector2d d = x - lay.centers[k];
    const double dist = d.norm();
    const double res = dist - lay.radii[k];
    if (std::abs(res) < std::abs(best.value)) {
      best.value = res;
      best.gradient = dist > 0.0 ? Eigen::Vector2d(d / dist) : Eigen::Vector2d::Zero();
    }
  }
  const Eigen::Vector2d d = x - lay.spiral_center;
  const double rho = d.norm();
  const double phi = std::atan2(d.y(), d.x());
  const int n_lo = static_cast<int>(std::ceil((lay.t_min - phi) / (2 * kPi)));
  const int n_hi = static_cast<int>(std::floor((lay.t_max - phi) / (2 * kPi)));
  for (int n = n_lo; n <= n_hi; ++n) {
    const double t = phi + 2 * kPi * n;
    const double res = rho - (lay.a + lay.b * t);
    if (std::abs(res) < std::abs(best.value)) {
      best.value = res;
      if (rho > 0.0) {
        const Eigen::Vector2d grad_rho = d / rho;
        const Eigen::Vector2d grad_phi(-d.y() / (rho * rho), d.x() / (rho * rho));
        best.gradient = grad_rho - lay.b * grad_phi;
      } else {
        best.gradient.setZero();
      }
    }
  }
  return best;
}

double swiss_roll_g(const Eigen::Vector2d& x) { return softplus(-3.0 - x.x()) * softplus(-x.y()) - 0.1; }

// --- sine ------------------------------------------------------------------

double sine_curve(double t) { return std::exp(-0.15 * t) * std::sin(t); }
double sine_slope(double t) { return std::exp(-0.15 * t) * (std::cos(t) - 0.15 * std::sin(t)); }
double sine_speed(double t) { return std::sqrt(1.0 + sine_slope(t) * sine_slope(t)); }

double simpson(double a, double b, int intervals, const std::function<double(double)>& f) {
  if (intervals % 2) ++intervals;
  const double h = (b - a) / intervals;
  double s = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// --- B-splines ---------------------------------------------------------------

/// Cox-de Boor basis values of degree `p` at u for a clamped knot vector.
Eigen::RowVectorXd bspline_basis(const std::vector<double>& knots, int p, int n_ctrl, double u) {
  Eigen::RowVectorXd N = Eigen::RowVectorXd::Zero(n_ctrl);
  const double u_end = knots[static_cast<std::size_t>(n_ctrl)];
  if (u >= u_end) {
    N[n_ctrl - 1] = 1.0;
    return N;
  }
  const int m = static_cast<int>(knots.size()) - 1;
  std::vector<double> basis(static_cast<std::size_t>(m), 0.0);
  for (int i = 0; i < m; ++i) {
    basis[static_cast<std::size_t>(i)] =
        (knots[static_cast<std::size_t>(i)] <= u && u < knots[static_cast<std::size_t>(i + 1)]) ? 1.0 : 0.0;
  }
  for (int deg = 1; deg <= p; ++deg) {
    for (int i = 0; i + deg < m; ++i) {
      const double k_i = knots[static_cast<std::size_t>(i)];
      const double k_id = knots[static_cast<std::size_t>(i + deg)];
      const double k_i1 = knots[static_cast<std::size_t>(i + 1)];
      const double k_id1 = knots[static_cast<std::size_t>(i + deg + 1)];
      double left = 0.0;
      double right = 0.0;
      if (k_id > k_i) left = (u - k_i) / (k_id - k_i) * basis[static_cast<std::size_t>(i)];
      if (k_id1 > k_i1) right = (k_id1 - u) / (k_id1 - k_i1) * basis[static_cast<std::size_t>(i + 1)];
      basis[static_cast<std::size_t>(i)] = left + right;
    }
  }
  for (int i = 0; i < n_ctrl; ++i) N[i] = basis[static_cast<std::size_t>(i)];
  return N;
}

std::vector<Obstacle> planning_obstacles(const MotionPlanningSpec& spec) {
  std::vector<Obstacle> obs;
  if (spec.layout == PlanningLayout::Grid4x4) {
    const std::array<double, 4> coords{-2.25, -0.75, 0.75, 2.25};
    for (double cy : coords) {
      for (double cx : coords) obs.push_back({Eigen::Vector2d(cx, cy), 0.5});
    }
    return obs;
  }
  Rng rng = make_stream(spec.layout_seed, "mp-random-layout");
  int attempts = 0;
  while (obs.size() < 20) {
    if (++attempts > 1000000) throw ConfigError("random obstacle layout rejection sampling failed");
    const double r = std::uniform_real_distribution<double>(0.2, 0.5)(rng);
    const Eigen::Vector2d c(std::uniform_real_distribution<double>(-3.0, 3.2)(rng),
                            std::uniform_real_distribution<double>(-3.6, 3.6)(rng));
    if ((c - spec.start).norm() < r + 0.4) continue;
    bool clear = true;
    for (const auto& o : obs) {
      if ((c - o.center).norm() < r + o.radius + 0.35) clear = false;
    }
    if (clear) obs.push_back({c, r});
  }
  return obs;
}

int parse_int_field(std::string_view text, std::string_view key) {
  const auto pos = text.find(key);
  if (pos == std::string_view::npos) throw InputError("missing '" + std::string(key) + "' in problem name");
  const char* begin = text.data() + pos + key.size();
  const char* end = text.data() + text.size();
  int value = 0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr == begin) throw InputError("malformed integer for '" + std::string(key) + "'");
  return value;
}

}  // namespace

// --- disks -------------------------------------------------------------------

Vector disk_cap_masses() {
  Vector m(2);
  m << 1.0 - std::cos(kCapRadius[0]), 1.0 - std::cos(kCapRadius[1]);
  return m / m.sum();
}

Benchmark make_disks(bool connected) {
  const double separation = connected ? 0.6 : 1.35;
  const auto geo = std::make_shared<const DiskGeometry>(disk_geometry(separation));

  ConstraintProblem p;
  p.name = connected ? "disks-connected" : "disks-disconnected";
  p.dim = 3;
  p.num_eq = 1;
  p.num_ineq = 1;
  p.eval_h = [](const Vector& x) { return Vector::Constant(1, x.norm() - kSphereRadius); };
  p.jac_h = [](const Vector& x) {
    const double n = x.norm();
    Matrix J = Matrix::Zero(1, 3);
    if (n > 0.0) J.row(0) = x.transpose() / n;
    return J;
  };
  p.eval_g = [geo](const Vector& x) {
    const Eigen::Vector3d v = x.head<3>();
    return Vector::Constant(1, std::min(cap_slack(*geo, 0, v), cap_slack(*geo, 1, v)));
  };
  p.jac_g = [geo](const Vector& x) {
    const Eigen::Vector3d v = x.head<3>();
    const int i = cap_slack(*geo, 1, v) < cap_slack(*geo, 0, v) ? 1 : 0;
    Matrix J(1, 3);
    J.row(0) = -geo->mu[static_cast<std::size_t>(i)].transpose() / kSphereRadius;
    return J;
  };
  p.lo = constant_bounds(3, -5.0);
  p.hi = constant_bounds(3, 5.0);
  p.intrinsic_dim_hint = 2;
  p.kl_clip = 2.0 * kSphereRadius;
  if (connected) {
    p.component_of = [](const Vector&) { return 0; };
    p.component_masses = Vector::Ones(1);
  } else {
    p.component_of = [geo](const Vector& x) {
      const Eigen::Vector3d v = x.head<3>();
      return cap_slack(*geo, 1, v) < cap_slack(*geo, 0, v) ? 1 : 0;
    };
    p.component_masses = disk_cap_masses();
  }

  auto sampler = std::make_shared<GroundTruthSampler>();
  sampler->description = "area-weighted cap choice, uniform cap sampling, 1/m(x) overlap correction";
  sampler->sample = [geo](std::size_t n, Rng& rng) {
    const Vector masses = disk_cap_masses();
    return rejection_fill(n, 3, [&](Vector& out) {
      const int i = uniform01(rng) < masses[0] ? 0 : 1;
      const auto ii = static_cast<std::size_t>(i);
      const double cos_alpha = std::uniform_real_distribution<double>(std::cos(kCapRadius[ii]), 1.0)(rng);
      const double sin_alpha = std::sqrt(std::max(0.0, 1.0 - cos_alpha * cos_alpha));
      const double phi = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
      const Eigen::Vector3d x =
          kSphereRadius * (cos_alpha * geo->mu[ii] + sin_alpha * (std::cos(phi) * geo->e1[ii] + std::sin(phi) * geo->e2[ii]));
      int covering = 0;
      for (int j = 0; j < 2; ++j) covering += cap_slack(*geo, j, x) <= 1e-12 ? 1 : 0;
      covering = std::max(covering, 1);
      const double u = uniform01(rng);
      if (u * covering >= 1.0) return false;
      out = x;
      return true;
    });
  };
  p.ground_truth = sampler;
  p.validate();
  return {std::move(p), nullptr, nullptr};
}

// --- seven lobes ----------------------------------------------------------------

double seven_lobes_speed(double theta) {
  const double r = 3.0 + std::cos(7.0 * theta);
  const double dr = -7.0 * std::sin(7.0 * theta);
  return std::sqrt(r * r + dr * dr);
}

Eigen::Vector2d seven_lobes_point(double theta) {
  const double r = 3.0 + std::cos(7.0 * theta);
  return {r * std::cos(theta), r * std::sin(theta)};
}

namespace {

double seven_lobes_g(double x1, double x2) {
  return (x1 - 2.0) * (x1 - 2.0) - 5.0 * x1 * x2 * x2 * x2 + 0.5 * std::pow(x2, 5) - 40.0;
}

}  // namespace

Benchmark make_seven_lobes() {
  ConstraintProblem p;
  p.name = "seven-lobes";
  p.dim = 2;
  p.num_eq = 1;
  p.num_ineq = 1;
  p.eval_h = [](const Vector& x) {
    const double theta = std::atan2(x[1], x[0]);
    return Vector::Constant(1, std::hypot(x[0], x[1]) - (3.0 + std::cos(7.0 * theta)));
  };
  p.jac_h = [](const Vector& x) {
    Matrix J = Matrix::Zero(1, 2);
    const double r2 = x[0] * x[0] + x[1] * x[1];
    if (r2 == 0.0) return J;
    const double r = std::sqrt(r2);
    const double theta = std::atan2(x[1], x[0]);
    const double s = 7.0 * std::sin(7.0 * theta);
    J(0, 0) = x[0] / r + s * (-x[1] / r2);
    J(0, 1) = x[1] / r + s * (x[0] / r2);
    return J;
  };
  p.eval_g = [](const Vector& x) { return Vector::Constant(1, seven_lobes_g(x[0], x[1])); };
  p.jac_g = [](const Vector& x) {
    Matrix J(1, 2);
    J(0, 0) = 2.0 * (x[0] - 2.0) - 5.0 * x[1] * x[1] * x[1];
    J(0, 1) = -15.0 * x[0] * x[1] * x[1] + 2.5 * std::pow(x[1], 4);
    return J;
  };
  p.lo = constant_bounds(2, -4.1);
  p.hi = constant_bounds(2, 4.1);
  p.intrinsic_dim_hint = 1;

  {
    constexpr int grid = 200000;
    Points dense(grid, 2);
    Eigen::Index kept = 0;
    for (int i = 0; i < grid; ++i) {
      const Eigen::Vector2d q = seven_lobes_point(2 * kPi * i / grid);
      if (seven_lobes_g(q.x(), q.y()) <= 0.0) dense.row(kept++) = q.transpose();
    }
    p.kl_clip = linf_diameter(dense.topRows(kept));
  }

  auto sampler = std::make_shared<GroundTruthSampler>();
  sampler->description = "polar parametrization with ds/dtheta acceptance (envelope sqrt(65))";
  sampler->sample = [](std::size_t n, Rng& rng) {
    const double envelope = std::sqrt(65.0);
    return rejection_fill(n, 2, [&](Vector& out) {
      const double theta = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
      if (uniform01(rng) * envelope >= seven_lobes_speed(theta)) return false;
      const Eigen::Vector2d q = seven_lobes_point(theta);
      if (seven_lobes_g(q.x(), q.y()) > 0.0 || q.cwiseAbs().maxCoeff() > 4.1) return false;
      out = q;
      return true;
    });
  };
  p.ground_truth = sampler;
  p.validate();
  return {std::move(p), nullptr, nullptr};
}

// --- sine ----------------------------------------------------------------------------

Benchmark make_sine() {
  ConstraintProblem p;
  p.name = "sine";
  p.dim = 2;
  p.num_eq = 1;
  p.num_ineq = 1;
  p.eval_h = [](const Vector& x) { return Vector::Constant(1, x[1] - sine_curve(x[0])); };
  p.jac_h = [](const Vector& x) {
    Matrix J(1, 2);
    J(0, 0) = -sine_slope(x[0]);
    J(0, 1) = 1.0;
    return J;
  };
  p.eval_g = [](const Vector& x) { return Vector::Constant(1, -x[1]); };
  p.jac_g = [](const Vector&) {
    Matrix J(1, 2);
    J << 0.0, -1.0;
    return J;
  };
  p.lo = constant_bounds(2, -20.0);
  p.hi = constant_bounds(2, 20.0);
  p.intrinsic_dim_hint = 1;

  // Feasible arcs are t in [2 j pi, (2 j + 1) pi], j = -3..3, cut at |t| < 20.
  constexpr int arcs = 7;
  Vector lengths(arcs);
  for (int j = -3; j <= 3; ++j) {
    const double a = std::max(2 * j * kPi, -20.0);
    const double b = std::min((2 * j + 1) * kPi, 20.0);
    lengths[j + 3] = simpson(a, b, 20000, sine_speed);
  }
  p.component_masses = lengths / lengths.sum();
  p.component_of = [](const Vector& x) {
    const int j = static_cast<int>(std::floor(x[0] / (2 * kPi)));
    return (j < -3 || j > 3) ? -1 : j + 3;
  };
  {
    constexpr int grid = 400000;
    Points dense(grid, 2);
    Eigen::Index kept = 0;
    for (int i = 0; i <= grid - 1; ++i) {
      const double t = -20.0 + 40.0 * i / (grid - 1);
      const double y = sine_curve(t);
      if (y >= 0.0) dense.row(kept++) << t, y;
    }
    p.kl_clip = linf_diameter(dense.topRows(kept));
  }

  auto sampler = std::make_shared<GroundTruthSampler>();
  sampler->description = "t ~ U(-20, 20) with arclength acceptance, halfspace and box filtering";
  sampler->sample = [](std::size_t n, Rng& rng) {
    // |cos t - 0.15 sin t| <= sqrt(1.0225) and exp(-0.15 t) <= exp(3) on (-20, 20).
    const double envelope = std::sqrt(1.0 + std::exp(6.0) * 1.0225);
    return rejection_fill(n, 2, [&](Vector& out) {
      const double t = std::uniform_real_distribution<double>(-20.0, 20.0)(rng);
      if (uniform01(rng) * envelope >= sine_speed(t)) return false;
      const double y = sine_curve(t);
      if (y < 0.0 || std::abs(y) > 20.0) return false;
      out = Vector(2);
      out << t, y;
      return true;
    });
  };
  p.ground_truth = sampler;
  p.validate();
  return {std::move(p), nullptr, nullptr};
}

// --- swiss roll ---------------------------------------------------------------------

Benchmark make_swiss_roll(std::uint64_t layout_seed) {
  const auto lay = std::make_shared<const SwissRollLayout>(swiss_roll_layout(layout_seed));
  ConstraintProblem p;
  p.name = "swiss-roll";
  p.dim = 2;
  p.num_eq = 1;
  p.num_ineq = 1;
  p.eval_h = [lay](const Vector& x) {
    return Vector::Constant(1, swiss_roll_residual(*lay, Eigen::Vector2d(x[0], x[1])).value);
  };
  p.jac_h = [lay](const Vector& x) {
    Matrix J(1, 2);
    J.row(0) = swiss_roll_residual(*lay, Eigen::Vector2d(x[0], x[1])).gradient.transpose();
    return J;
  };
  p.eval_g = [](const Vector& x) { return Vector::Constant(1, swiss_roll_g(Eigen::Vector2d(x[0], x[1]))); };
  p.jac_g = [](const Vector& x) {
    Matrix J(1, 2);
    J(0, 0) = -sigmoid(-3.0 - x[0]) * softplus(-x[1]);
    J(0, 1) = -softplus(-3.0 - x[0]) * sigmoid(-x[1]);
    return J;
  };
  p.lo = constant_bounds(2, -10.0);
  p.hi = constant_bounds(2, 10.0);
  p.intrinsic_dim_hint = 1;

  auto spiral_point = [lay](double t) {
    const double r = lay->a + lay->b * t;
    return Eigen::Vector2d(lay->spiral_center + r * Eigen::Vector2d(std::cos(t), std::sin(t)));
  };
  {
    std::vector<Eigen::Vector2d> dense;
    for (std::size_t k = 0; k < lay->centers.size(); ++k) {
      for (int i = 0; i < 20000; ++i) {
        const double phi = 2 * kPi * i / 20000;
        dense.push_back(lay->centers[k] + lay->radii[k] * Eigen::Vector2d(std::cos(phi), std::sin(phi)));
      }
    }
    for (int i = 0; i <= 100000; ++i) dense.push_back(spiral_point(lay->t_min + (lay->t_max - lay->t_min) * i / 100000));
    Points pts(static_cast<Eigen::Index>(dense.size()), 2);
    Eigen::Index kept = 0;
    for (const auto& q : dense) {
      if (swiss_roll_g(q) <= 0.0) pts.row(kept++) = q.transpose();
    }
    p.kl_clip = linf_diameter(pts.topRows(kept));
  }

  auto sampler = std::make_shared<GroundTruthSampler>();
  sampler->description = "branch chosen by parameter length, arclength acceptance, inequality filtering";
  sampler->sample = [lay, spiral_point](std::size_t n, Rng& rng) {
    const double spiral_len = lay->t_max - lay->t_min;
    const double circle_len = 2 * kPi;
    const double total = spiral_len + circle_len * static_cast<double>(lay->centers.size());
    double envelope = std::hypot(lay->a + lay->b * lay->t_max, lay->b);
    for (double r : lay->radii) envelope = std::max(envelope, r);
    return rejection_fill(n, 2, [&](Vector& out) {
      const double pick = uniform01(rng) * total;
      Eigen::Vector2d q;
      double speed = 0.0;
      if (pick < spiral_len) {
        const double t = std::uniform_real_distribution<double>(lay->t_min, lay->t_max)(rng);
        q = spiral_point(t);
        speed = std::hypot(lay->a + lay->b * t, lay->b);
      } else {
        const auto k = std::min(static_cast<std::size_t>((pick - spiral_len) / circle_len), lay->centers.size() - 1);
        const double phi = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
        q = lay->centers[k] + lay->radii[k] * Eigen::Vector2d(std::cos(phi), std::sin(phi));
        speed = lay->radii[k];
      }
      if (uniform01(rng) * envelope >= speed) return false;
      if (swiss_roll_g(q) > 0.0 || q.cwiseAbs().maxCoeff() > 10.0) return false;
      out = q;
      return true;
    });
  };
  p.ground_truth = sampler;
  p.validate();
  return {std::move(p), nullptr, nullptr};
}

// --- stress test -------------------------------------------------------------------

Benchmark make_stress_test(const StressTestSpec& spec) {
  if (spec.m < 1) throw ConfigError("stress test needs m >= 1");
  if (spec.d - spec.m < 1) throw ConfigError("stress test needs intrinsic dimension d - m >= 1");
  if (spec.n_components < 1 || spec.n_cutouts < 0) throw ConfigError("stress test needs components");
  if (spec.n_cutouts > spec.n_components) throw ConfigError("stress test places at most one cutout per component");

  const int d = spec.d;
  const int p_latent = d - spec.m + 1;
  const int q = d - spec.m;
  Rng rng = make_stream(spec.layout_seed, "stress-layout", static_cast<std::uint64_t>(d * 1000 + spec.m));

  auto layout = std::make_shared<StressLayout>();
  {
    Matrix gauss(d, d);
    for (int i = 0; i < d; ++i) {
      for (int j = 0; j < d; ++j) gauss(i, j) = standard_normal(rng);
    }
    const Matrix Q = Eigen::HouseholderQR<Matrix>(gauss).householderQ();
    layout->constraint_rows = Q.leftCols(spec.m - 1).transpose();
    layout->nullspace = Q.rightCols(p_latent);
  }
  int attempts = 0;
  const double half_width = 1.0 + 0.5 * std::sqrt(static_cast<double>(spec.n_components));
  while (static_cast<int>(layout->centers.size()) < spec.n_components) {
    if (++attempts > 1000000) throw ConfigError("stress-test component placement failed");
    const double r = 0.25 * std::uniform_real_distribution<double>(0.5, 1.5)(rng);
    Vector c(p_latent);
    for (int j = 0; j < p_latent; ++j) c[j] = std::uniform_real_distribution<double>(-half_width, half_width)(rng);
    bool clear = true;
    for (std::size_t j = 0; j < layout->centers.size(); ++j) {
      if ((c - layout->centers[j]).norm() < r + layout->radii[j] + 0.25) clear = false;
    }
    if (!clear) continue;
    layout->centers.push_back(c);
    layout->radii.push_back(r);
  }
  std::vector<int> owners(static_cast<std::size_t>(spec.n_components));
  for (int i = 0; i < spec.n_components; ++i) owners[static_cast<std::size_t>(i)] = i;
  std::shuffle(owners.begin(), owners.end(), rng);
  for (int j = 0; j < spec.n_cutouts; ++j) {
    const int owner = owners[static_cast<std::size_t>(j)];
    const auto oi = static_cast<std::size_t>(owner);
    layout->cutout_component.push_back(owner);
    layout->cutout_centers.push_back(layout->centers[oi] + layout->radii[oi] * random_unit_vector(rng, p_latent));
    layout->cutout_radii.push_back(0.5 * layout->radii[oi]);
  }
  std::shared_ptr<const StressLayout> lay = layout;

  auto nearest_sphere = [lay](const Vector& z) {
    int best = 0;
    double best_res = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lay->centers.size(); ++i) {
      const double res = std::abs((z - lay->centers[i]).squaredNorm() - lay->radii[i] * lay->radii[i]);
      if (res < best_res) {
        best_res = res;
        best = static_cast<int>(i);
      }
    }
    return best;
  };

  ConstraintProblem p;
  p.name = "stress:d=" + std::to_string(d) + ",m=" + std::to_string(spec.m);
  p.dim = d;
  p.num_eq = spec.m;
  p.num_ineq = spec.n_cutouts;
  p.eval_h = [lay, nearest_sphere, m = spec.m](const Vector& x) {
    Vector h(m);
    h.head(m - 1) = lay->constraint_rows * x;
    const Vector z = lay->nullspace.transpose() * x;
    const auto i = static_cast<std::size_t>(nearest_sphere(z));
    h[m - 1] = (z - lay->centers[i]).squaredNorm() - lay->radii[i] * lay->radii[i];
    return h;
  };
  p.jac_h = [lay, nearest_sphere, m = spec.m, d](const Vector& x) {
    Matrix J(m, d);
    J.topRows(m - 1) = lay->constraint_rows;
    const Vector z = lay->nullspace.transpose() * x;
    const auto i = static_cast<std::size_t>(nearest_sphere(z));
    J.row(m - 1) = 2.0 * (lay->nullspace * (z - lay->centers[i])).transpose();
    return J;
  };
  p.eval_g = [lay](const Vector& x) {
    const Vector z = lay->nullspace.transpose() * x;
    Vector g(static_cast<Eigen::Index>(lay->cutout_centers.size()));
    for (std::size_t j = 0; j < lay->cutout_centers.size(); ++j) {
      g[static_cast<Eigen::Index>(j)] = lay->cutout_radii[j] * lay->cutout_radii[j] - (z - lay->cutout_centers[j]).squaredNorm();
    }
    return g;
  };
  p.jac_g = [lay, d](const Vector& x) {
    const Vector z = lay->nullspace.transpose() * x;
    Matrix J(static_cast<Eigen::Index>(lay->cutout_centers.size()), d);
    for (std::size_t j = 0; j < lay->cutout_centers.size(); ++j) {
      J.row(static_cast<Eigen::Index>(j)) = -2.0 * (lay->nullspace * (z - lay->cutout_centers[j])).transpose();
    }
    return J;
  };
  p.lo = constant_bounds(d, -28.0);
  p.hi = constant_bounds(d, 28.0);
  p.intrinsic_dim_hint = q;
  p.component_of = [lay, nearest_sphere](const Vector& x) { return nearest_sphere(lay->nullspace.transpose() * x); };
  {
    // One cutout of radius r/2 per holed sphere removes the same fraction of
    // every such sphere, so spheres without a cutout carry relatively more.
    Vector masses(spec.n_components);
    const double cap_angle = 2.0 * std::asin(0.25);
    const double removed = simpson(0.0, cap_angle, 2000, [q](double a) { return std::pow(std::sin(a), q - 1); }) /
                           simpson(0.0, kPi, 20000, [q](double a) { return std::pow(std::sin(a), q - 1); });
    for (int i = 0; i < spec.n_components; ++i) {
      const bool holed = std::find(layout->cutout_component.begin(), layout->cutout_component.end(), i) !=
                         layout->cutout_component.end();
      masses[i] = std::pow(layout->radii[static_cast<std::size_t>(i)], q) * (holed ? 1.0 - removed : 1.0);
    }
    p.component_masses = masses / masses.sum();
  }

  auto sampler = std::make_shared<GroundTruthSampler>();
  sampler->description = "surface-area-weighted sphere choice, Gaussian directions, cutout rejection";
  sampler->sample = [lay, q, p_latent, d](std::size_t n, Rng& r) {
    Vector area(static_cast<Eigen::Index>(lay->radii.size()));
    for (std::size_t i = 0; i < lay->radii.size(); ++i) area[static_cast<Eigen::Index>(i)] = std::pow(lay->radii[i], q);
    std::discrete_distribution<int> choose(area.data(), area.data() + area.size());
    return rejection_fill(n, d, [&](Vector& out) {
      const auto i = static_cast<std::size_t>(choose(r));
      const Vector z = lay->centers[i] + lay->radii[i] * random_unit_vector(r, p_latent);
      for (std::size_t j = 0; j < lay->cutout_centers.size(); ++j) {
        if ((z - lay->cutout_centers[j]).squaredNorm() < lay->cutout_radii[j] * lay->cutout_radii[j]) return false;
      }
      out = lay->nullspace * z;
      return true;
    });
  };
  p.ground_truth = sampler;
  {
    Rng clip_rng = make_stream(spec.layout_seed, "stress-clip");
    p.kl_clip = linf_diameter(sampler->sample(100000, clip_rng));
  }
  p.validate();
  return {std::move(p), nullptr, lay};
}

// --- motion planning -----------------------------------------------------------------

PlanningModel::PlanningModel(const MotionPlanningSpec& spec, std::vector<Obstacle> obstacles)
    : spec_(spec), obstacles_(std::move(obstacles)) {
  if (spec.n_waypoints < 1 || spec.samples < 2) throw ConfigError("motion planning needs waypoints and samples");
  const int n_ctrl = spec.n_waypoints + 1;
  constexpr int degree = 3;
  const int order = std::min(degree, n_ctrl - 1);
  knots_.assign(static_cast<std::size_t>(order + 1), 0.0);
  const int interior = n_ctrl - order - 1;
  for (int i = 1; i <= interior; ++i) knots_.push_back(static_cast<double>(i) / (interior + 1));
  knots_.insert(knots_.end(), static_cast<std::size_t>(order + 1), 1.0);

  interpolation_.resize(n_ctrl, n_ctrl);
  for (int j = 0; j < n_ctrl; ++j) {
    interpolation_.row(j) = bspline_basis(knots_, order, n_ctrl, static_cast<double>(j) / spec.n_waypoints);
  }
  const Matrix pinv = interpolation_.completeOrthogonalDecomposition().pseudoInverse();
  Matrix eval(spec.samples, n_ctrl);
  for (int t = 1; t <= spec.samples; ++t) {
    eval.row(t - 1) = bspline_basis(knots_, order, n_ctrl, static_cast<double>(t) / spec.samples);
  }
  path_matrix_ = eval * pinv;
}

Matrix PlanningModel::basis_row(double u) const {
  const int n_ctrl = spec_.n_waypoints + 1;
  return bspline_basis(knots_, std::min(3, n_ctrl - 1), n_ctrl, u);
}

Matrix PlanningModel::control_points(const Vector& x) const {
  const int n_ctrl = spec_.n_waypoints + 1;
  Matrix Q(n_ctrl, 2);
  Q.row(0) = spec_.start.transpose();
  for (int j = 0; j < spec_.n_waypoints; ++j) Q.row(j + 1) << x[2 * j], x[2 * j + 1];
  return interpolation_.completeOrthogonalDecomposition().pseudoInverse() * Q;
}

Eigen::Vector2d PlanningModel::evaluate(const Matrix& control_points, double u) const {
  return (basis_row(u) * control_points).transpose();
}

Points PlanningModel::path(const Vector& x) const {
  Points pts(spec_.samples + 1, 2);
  pts.row(0) = spec_.start.transpose();
  for (int t = 0; t < spec_.samples; ++t) {
    Eigen::Vector2d p = path_matrix_(t, 0) * spec_.start;
    for (int j = 0; j < spec_.n_waypoints; ++j) p += path_matrix_(t, j + 1) * Eigen::Vector2d(x[2 * j], x[2 * j + 1]);
    pts.row(t + 1) = p.transpose();
  }
  return pts;
}

int PlanningModel::num_inequalities() const {
  const int T = spec_.samples;
  return static_cast<int>(obstacles_.size()) * T + T + T + (T - 1);
}

Vector PlanningModel::inequalities(const Vector& x) const {
  const Points p = path(x);
  const int T = spec_.samples;
  Vector g(num_inequalities());
  int row = 0;
  for (const auto& o : obstacles_) {
    for (int t = 1; t <= T; ++t) g[row++] = o.radius * o.radius - (p.row(t).transpose() - o.center).squaredNorm();
  }
  for (int t = 1; t <= T; ++t) g[row++] = p(t - 1, 0) - p(t, 0);
  for (int t = 1; t <= T; ++t) g[row++] = (p.row(t) - p.row(t - 1)).squaredNorm() - spec_.speed_limit * spec_.speed_limit;
  for (int t = 1; t <= T - 1; ++t) {
    g[row++] = (p.row(t + 1) - 2.0 * p.row(t) + p.row(t - 1)).squaredNorm() - spec_.accel_limit * spec_.accel_limit;
  }
  return g;
}

Matrix PlanningModel::inequality_jacobian(const Vector& x) const {
  const Points p = path(x);
  const int T = spec_.samples;
  const int nw = spec_.n_waypoints;
  const int d = 2 * nw;
  // dp_t / dX_j = S(t-1, j+1) * I for t >= 1; p_0 is fixed.
  auto weight = [&](int t, int j) { return t == 0 ? 0.0 : path_matrix_(t - 1, j + 1); };
  Matrix J = Matrix::Zero(num_inequalities(), d);
  int row = 0;
  for (const auto& o : obstacles_) {
    for (int t = 1; t <= T; ++t, ++row) {
      const Eigen::Vector2d diff = p.row(t).transpose() - o.center;
      for (int j = 0; j < nw; ++j) J.block(row, 2 * j, 1, 2) = -2.0 * weight(t, j) * diff.transpose();
    }
  }
  for (int t = 1; t <= T; ++t, ++row) {
    for (int j = 0; j < nw; ++j) J(row, 2 * j) = weight(t - 1, j) - weight(t, j);
  }
  for (int t = 1; t <= T; ++t, ++row) {
    const Eigen::RowVector2d diff = p.row(t) - p.row(t - 1);
    for (int j = 0; j < nw; ++j) J.block(row, 2 * j, 1, 2) = 2.0 * (weight(t, j) - weight(t - 1, j)) * diff;
  }
  for (int t = 1; t <= T - 1; ++t, ++row) {
    const Eigen::RowVector2d acc = p.row(t + 1) - 2.0 * p.row(t) + p.row(t - 1);
    for (int j = 0; j < nw; ++j) {
      J.block(row, 2 * j, 1, 2) = 2.0 * (weight(t + 1, j) - 2.0 * weight(t, j) + weight(t - 1, j)) * acc;
    }
  }
  return J;
}

Benchmark make_motion_planning(const MotionPlanningSpec& spec) {
  auto model = std::make_shared<const PlanningModel>(spec, planning_obstacles(spec));
  const int d = 2 * spec.n_waypoints;
  ConstraintProblem p;
  p.name = spec.layout == PlanningLayout::Grid4x4 ? "mp-grid" : "mp-random";
  p.dim = d;
  p.num_eq = 1;
  p.num_ineq = model->num_inequalities();
  p.eval_h = [d, goal = spec.goal_x](const Vector& x) { return Vector::Constant(1, x[d - 2] - goal); };
  p.jac_h = [d](const Vector&) {
    Matrix J = Matrix::Zero(1, d);
    J(0, d - 2) = 1.0;
    return J;
  };
  p.eval_g = [model](const Vector& x) { return model->inequalities(x); };
  p.jac_g = [model](const Vector& x) { return model->inequality_jacobian(x); };
  p.lo = constant_bounds(d, -spec.workspace);
  p.hi = constant_bounds(d, spec.workspace);
  p.intrinsic_dim_hint = d - 1;
  p.validate();
  return {std::move(p), model, nullptr};
}

// --- grasping --------------------------------------------------------------------

Benchmark make_grasping() {
  struct Capsule {
    Eigen::Vector3d axis = Eigen::Vector3d(1.0, 1.0, 1.0).normalized();
    double length = 1.0;
    double radius = 0.25;
    double friction = 1.0;
    Eigen::Vector3d gravity{0.0, 0.0, 1.0};
    double band = 0.25;
    double force_min = 0.1;
    double force_max = 1.0;
  };
  const Capsule cap;

  auto finger = [](const Vector& x, int i) {
    return std::pair<Eigen::Vector3d, Eigen::Vector3d>(x.segment<3>(6 * i), x.segment<3>(6 * i + 3));
  };
  auto axis_offset = [cap](const Eigen::Vector3d& point) {
    const double s = std::clamp(cap.axis.dot(point), -cap.length / 2, cap.length / 2);
    return Eigen::Vector3d(s * cap.axis - point);
  };

  ConstraintProblem p;
  p.name = "grasping";
  p.dim = 18;
  p.num_eq = 9;
  p.num_ineq = 12;
  p.eval_h = [cap, finger, axis_offset](const Vector& x) {
    Vector h(9);
    Eigen::Vector3d force = -cap.gravity;
    Eigen::Vector3d torque = Eigen::Vector3d::Zero();
    for (int i = 0; i < 3; ++i) {
      const auto [pt, f] = finger(x, i);
      force += f;
      torque += pt.cross(f);
      h[6 + i] = axis_offset(pt).norm() - cap.radius;
    }
    h.segment<3>(0) = force;
    h.segment<3>(3) = torque;
    return h;
  };
  p.eval_g = [cap, finger, axis_offset](const Vector& x) {
    Vector g(12);
    for (int i = 0; i < 3; ++i) {
      const auto [pt, f] = finger(x, i);
      const Eigen::Vector3d n = axis_offset(pt) / cap.radius;
      const double normal_part = n.dot(f);
      g[4 * i + 0] = (f - n * normal_part).norm() - cap.friction * (-normal_part);
      g[4 * i + 1] = cap.force_min - f.norm();
      g[4 * i + 2] = f.norm() - cap.force_max;
      g[4 * i + 3] = cap.band / 2 - std::abs(cap.axis.dot(pt));
    }
    return g;
  };
  p.lo = constant_bounds(18, -1.0);
  p.hi = constant_bounds(18, 1.0);
  p.intrinsic_dim_hint = 9;
  p.validate();
  return {std::move(p), nullptr, nullptr};
}

// --- disk grid -------------------------------------------------------------------

Eigen::Vector2d DiskGrid::center(int component) const {
  const int r = component / cols;
  const int c = component % cols;
  return {spacing * (c - 0.5 * (cols - 1)), spacing * (r - 0.5 * (rows - 1))};
}

int DiskGrid::nearest(const Eigen::Vector2d& x) const {
  const int c = std::clamp(static_cast<int>(std::lround(x.x() / spacing + 0.5 * (cols - 1))), 0, cols - 1);
  const int r = std::clamp(static_cast<int>(std::lround(x.y() / spacing + 0.5 * (rows - 1))), 0, rows - 1);
  return r * cols + c;
}

Benchmark make_disk_grid(const DiskGrid& grid) {
  ConstraintProblem p;
  p.name = "disk-grid";
  p.dim = 2;
  p.num_eq = 0;
  p.num_ineq = 1;
  p.eval_g = [grid](const Vector& x) {
    const Eigen::Vector2d v(x[0], x[1]);
    return Vector::Constant(1, (v - grid.center(grid.nearest(v))).norm() - grid.radius);
  };
  p.jac_g = [grid](const Vector& x) {
    const Eigen::Vector2d v(x[0], x[1]);
    const Eigen::Vector2d diff = v - grid.center(grid.nearest(v));
    Matrix J = Matrix::Zero(1, 2);
    const double n = diff.norm();
    if (n > 0.0) J.row(0) = diff.transpose() / n;
    return J;
  };
  const double extent = 0.5 * grid.spacing * std::max(grid.rows, grid.cols);
  p.lo = constant_bounds(2, -extent);
  p.hi = constant_bounds(2, extent);
  p.intrinsic_dim_hint = 2;
  p.component_of = [grid](const Vector& x) { return grid.nearest(Eigen::Vector2d(x[0], x[1])); };
  p.component_masses = Vector::Constant(grid.size(), 1.0 / grid.size());
  p.kl_clip = grid.spacing * (std::max(grid.rows, grid.cols) - 1) + 2 * grid.radius;

  auto sampler = std::make_shared<GroundTruthSampler>();
  sampler->description = "uniform disk choice, uniform point in disk";
  sampler->sample = [grid](std::size_t n, Rng& rng) {
    return rejection_fill(n, 2, [&](Vector& out) {
      const int c = std::uniform_int_distribution<int>(0, grid.size() - 1)(rng);
      const double r = grid.radius * std::sqrt(uniform01(rng));
      const double phi = std::uniform_real_distribution<double>(0.0, 2 * kPi)(rng);
      out = grid.center(c) + r * Eigen::Vector2d(std::cos(phi), std::sin(phi));
      return true;
    });
  };
  p.ground_truth = sampler;
  p.validate();
  return {std::move(p), nullptr, nullptr};
}

// --- registry ----------------------------------------------------------------------

std::vector<std::string> problem_names() {
  return {"disks-connected", "disks-disconnected", "seven-lobes", "sine",    "swiss-roll",
          "stress:d=<d>,m=<m>", "mp-grid",           "mp-random",   "grasping", "disk-grid"};
}

Benchmark make_benchmark(std::string_view name) {
  if (name == "disks-connected") return make_disks(true);
  if (name == "disks-disconnected") return make_disks(false);
  if (name == "seven-lobes") return make_seven_lobes();
  if (name == "sine") return make_sine();
  if (name == "swiss-roll") return make_swiss_roll(0);
  if (name == "mp-grid") return make_motion_planning({.layout = PlanningLayout::Grid4x4});
  if (name == "mp-random") return make_motion_planning({.layout = PlanningLayout::Random20});
  if (name == "grasping") return make_grasping();
  if (name == "disk-grid") return make_disk_grid();
  if (name.starts_with("stress:")) {
    const std::string_view args = name.substr(7);
    StressTestSpec spec;
    spec.d = parse_int_field(args, "d=");
    spec.m = parse_int_field(args, "m=");
    return make_stress_test(spec);
  }
  throw InputError("unknown problem '" + std::string(name) + "'");
}

Points ground_truth(const ConstraintProblem& problem, std::size_t n, Rng& rng) {
  if (!problem.ground_truth || !problem.ground_truth->sample) {
    throw UnsupportedError("problem '" + problem.name + "' has no ground-truth sampler");
  }
  return problem.ground_truth->sample(n, rng);
}

}  // namespace masem::benchmarks
