#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "masem/benchmarks.hpp"
#include "masem/kernels.hpp"
#include "support.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <numbers>

using namespace masem;
using testing::vec;

namespace {

ConstraintProblem horizontal_line() {
  auto p = testing::free_box(2, -5, 5);
  p.num_eq = 1;
  p.eval_h = [](const Vector& x) { return Vector::Constant(1, x[1]); };
  p.jac_h = [](const Vector&) {
    Matrix J(1, 2);
    J << 0.0, 1.0;
    return J;
  };
  p.intrinsic_dim_hint = 1;
  return p;
}

}  // namespace

TEST_CASE("NHR stays on the sphere") {
  const auto p = testing::sphere();
  KernelConfig cfg;
  Rng rng = make_stream(1, "k");
  Vector x = vec({2.5, 0, 0});
  for (int i = 0; i < 200; ++i) {
    x = nhr_transition(x, p, cfg, rng);
    CHECK(std::abs(x.norm() - 2.5) <= 1e-8);
  }
}

TEST_CASE("NHR on a line keeps the second coordinate at zero") {
  const auto p = horizontal_line();
  KernelConfig cfg;
  cfg.nhr_max_step = 0.7;
  Rng rng = make_stream(2, "k");
  for (int i = 0; i < 100; ++i) {
    const Vector y = nhr_transition(vec({0, 0}), p, cfg, rng);
    CHECK(std::abs(y[1]) <= 1e-8);
    CHECK(std::abs(y[0]) <= 0.7 + 1e-8);
  }
}

TEST_CASE("NHR displacement is bounded by the step") {
  const auto p = testing::free_box(2, -5, 5);
  KernelConfig cfg;
  cfg.nhr_max_step = 1e-3;
  Rng rng = make_stream(3, "k");
  for (int i = 0; i < 100; ++i) CHECK((nhr_transition(vec({0, 0}), p, cfg, rng)).norm() <= 1e-3);
}

TEST_CASE("NHR rejects proposals outside the box") {
  const auto p = testing::free_box(1, 0, 1);
  KernelConfig cfg;
  cfg.nhr_max_step = 100.0;
  Rng rng = make_stream(4, "k");
  int unchanged = 0;
  for (int i = 0; i < 200; ++i) unchanged += nhr_transition(vec({0.5}), p, cfg, rng)[0] == 0.5 ? 1 : 0;
  CHECK(unchanged > 180);
}

TEST_CASE("NHR with a small step never changes disk-grid component") {
  const auto bench = benchmarks::make_disk_grid();
  const auto& p = bench.problem;
  KernelConfig cfg;
  Rng rng = make_stream(5, "k");
  for (int c = 0; c < 100; c += 7) {
    const benchmarks::DiskGrid grid;
    Vector x = grid.center(c);
    for (int s = 0; s < 50; ++s) {
      x = nhr_transition(x, p, cfg, rng);
      CHECK(p.component_of(x) == c);
    }
  }
}

TEST_CASE("NHR is uniform on the circle") {
  auto circle = testing::sphere(2, 1.0, 2.0);
  KernelConfig cfg;
  cfg.nhr_max_step = 1.0;
  const double crit = boost::math::quantile(boost::math::chi_squared(35), 0.99);
  int passed = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Points start(1000, 2);
    for (int i = 0; i < 1000; ++i) start.row(i) << 1.0, 0.0;
    auto ens = make_ensemble(start, circle, seed);
    for (int s = 0; s < 300; ++s) kernel_step(ens, circle, cfg);
    std::vector<double> counts(36, 0.0);
    for (Eigen::Index i = 0; i < ens.size(); ++i) {
      const double a = std::atan2(ens.positions(i, 1), ens.positions(i, 0)) + std::numbers::pi;
      counts[std::min<std::size_t>(35, static_cast<std::size_t>(a / (2 * std::numbers::pi) * 36))] += 1.0;
    }
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - 1000.0 / 36) * (c - 1000.0 / 36) / (1000.0 / 36);
    passed += chi2 < crit ? 1 : 0;
  }
  CHECK(passed >= 4);
}

TEST_CASE("kernel transitions are deterministic per stream") {
  const auto bench = benchmarks::make_seven_lobes();
  const Vector x = benchmarks::seven_lobes_point(0.3);
  for (KernelKind kind : {KernelKind::NHR, KernelKind::OLLA}) {
    KernelConfig cfg;
    cfg.kind = kind;
    Rng a = make_stream(8, "k");
    Rng b = make_stream(8, "k");
    const Vector ya = kind == KernelKind::NHR ? nhr_transition(x, bench.problem, cfg, a) : olla_transition(x, bench.problem, cfg, a);
    const Vector yb = kind == KernelKind::NHR ? nhr_transition(x, bench.problem, cfg, b) : olla_transition(x, bench.problem, cfg, b);
    CHECK(ya == yb);
  }
}

TEST_CASE("OLLA with zero step on a feasible point stays put") {
  const auto p = testing::sphere();
  KernelConfig cfg;
  cfg.kind = KernelKind::OLLA;
  cfg.olla_step_size = 0.0;
  Rng rng = make_stream(1, "o");
  const Vector x = vec({0, 0, 2.5});
  CHECK((olla_transition(x, p, cfg, rng) - x).norm() <= 1e-12);
}

TEST_CASE("OLLA landing pulls toward the sphere") {
  const auto p = testing::sphere();
  KernelConfig cfg;
  cfg.kind = KernelKind::OLLA;
  cfg.olla_step_size = 0.0;
  cfg.olla_landing_gain = 0.5;
  Rng rng = make_stream(1, "o");
  for (const Vector& x : {vec({1, 0, 0}), vec({0, 3.5, 1}), vec({-2, -2, -2})}) {
    const Vector y = olla_transition(x, p, cfg, rng);
    CHECK(std::abs(y.norm() - 2.5) < std::abs(x.norm() - 2.5));
  }
}

TEST_CASE("OLLA without equalities is a Langevin step") {
  const auto p = testing::free_box(2, -5, 5);
  KernelConfig cfg;
  cfg.kind = KernelKind::OLLA;
  cfg.olla_step_size = 1e-2;
  Rng rng = make_stream(5, "o");
  Vector mean = Vector::Zero(2);
  double var = 0.0;
  const int n = 4000;
  for (int i = 0; i < n; ++i) {
    const Vector y = olla_transition(vec({0, 0}), p, cfg, rng);
    mean += y / n;
    var += y.squaredNorm() / (2.0 * n);
  }
  CHECK(mean.norm() < 0.01);
  CHECK(var == doctest::Approx(2e-2).epsilon(0.1));
}

TEST_CASE("tangent projector annihilates the normal") {
  Matrix J(1, 3);
  J << 0.0, 0.0, 1.0;
  const Matrix P = tangent_projector(J, 1e-12);
  CHECK((P * J.transpose()).norm() < 1e-9);
  CHECK(P.trace() == doctest::Approx(2.0));
}

TEST_CASE("SCMC on an unconstrained box stays uniform") {
  const auto p = testing::free_box(2, 0, 1);
  const auto res = scmc_run(p, 2000, geometric_schedule(5), 3);
  const Eigen::RowVectorXd mean = res.ensemble.positions.colwise().mean();
  CHECK(mean[0] == doctest::Approx(0.5).epsilon(0.05));
  CHECK(mean[1] == doctest::Approx(0.5).epsilon(0.05));
  for (const auto& st : res.log) CHECK(st.ess == doctest::Approx(2000.0));
}

TEST_CASE("SCMC with a single zero-strength stage is uniform") {
  const auto res = scmc_run(testing::sphere(), 1000, {0.0}, 1, ScmcConfig{.project_at_end = false});
  const Eigen::RowVectorXd mean = res.pre_projection.colwise().mean();
  CHECK(mean.norm() < 0.4);
  CHECK(res.pre_projection.cwiseAbs().maxCoeff() > 4.0);
}

TEST_CASE("SCMC projects onto the sphere") {
  const auto res = scmc_run(testing::sphere(), 1000, geometric_schedule(50), 2);
  CHECK(mean_max_violation(res.ensemble) <= 1e-6);
}

TEST_CASE("geometric schedule endpoints") {
  const auto s = geometric_schedule(10);
  CHECK(s.front() == doctest::Approx(1.0));
  CHECK(s.back() == doctest::Approx(1e6));
  for (std::size_t i = 1; i < s.size(); ++i) CHECK(s[i] > s[i - 1]);
}
