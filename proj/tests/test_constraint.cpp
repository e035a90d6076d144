#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "masem/benchmarks.hpp"
#include "support.hpp"

#include <limits>

using namespace masem;
using testing::vec;

TEST_CASE("slack on the sphere") {
  const auto p = testing::sphere();
  const SlackValue on = slack(vec({2.5, 0, 0}), p);
  CHECK(on.value == 0.0);
  CHECK(on.max_violation == 0.0);
  const SlackValue origin = slack(vec({0, 0, 0}), p);
  CHECK(origin.value == doctest::Approx(3.125).epsilon(1e-15));
  CHECK(origin.max_violation == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("slack without constraints is zero") {
  const auto p = testing::free_box(3, -1, 1);
  CHECK(slack(vec({0.3, -0.2, 0.9}), p).value == 0.0);
  CHECK(slack(vec({0.3, -0.2, 0.9}), p).max_violation == 0.0);
}

TEST_CASE("slack rejects wrong dimension") {
  CHECK_THROWS_AS(slack(vec({1, 2}), testing::sphere()), InputError);
}

TEST_CASE("residual stacking") {
  SUBCASE("equality") {
    const auto lin = residual_and_jacobian(vec({3, 0}), testing::shifted_line());
    REQUIRE(lin.residual.size() == 1);
    CHECK(lin.residual[0] == 2.0);
    CHECK(lin.jacobian(0, 0) == 1.0);
    CHECK(lin.jacobian(0, 1) == 0.0);
  }
  SUBCASE("inactive inequality") {
    const auto lin = residual_and_jacobian(vec({-1, 0}), testing::halfplane());
    CHECK(lin.residual.size() == 0);
  }
  SUBCASE("active inequality") {
    const auto lin = residual_and_jacobian(vec({0.5, 0}), testing::halfplane());
    REQUIRE(lin.residual.size() == 1);
    CHECK(lin.residual[0] == 0.5);
    CHECK(lin.jacobian(0, 0) == 1.0);
  }
  SUBCASE("half squared residual equals slack") {
    const auto bench = benchmarks::make_disks(false);
    Rng rng = make_stream(3, "test");
    for (int i = 0; i < 50; ++i) {
      const Vector x = normal_vector(rng, 3, 2.0);
      const auto lin = residual_and_jacobian(x, bench.problem);
      CHECK(0.5 * lin.residual.squaredNorm() == doctest::Approx(slack(x, bench.problem).value).epsilon(1e-12));
    }
  }
}

TEST_CASE("non-finite constraint output names its index") {
  auto p = testing::free_box(2, -1, 1);
  p.num_eq = 2;
  p.eval_h = [](const Vector& x) { return vec({x[0], std::numeric_limits<double>::quiet_NaN()}); };
  try {
    (void)slack(vec({0, 0}), p);
    FAIL("expected EvaluationError");
  } catch (const EvaluationError& e) {
    CHECK(e.index() == 1);
  }
}

TEST_CASE("clamp_to_bounds") {
  const auto p = testing::sphere();
  const Vector c = clamp_to_bounds(vec({7, -9, 0}), p);
  CHECK(c == vec({5, -5, 0}));
  CHECK(clamp_to_bounds(c, p) == c);
  CHECK(clamp_to_bounds(p.hi, p) == p.hi);
}

TEST_CASE("is_feasible") {
  const auto p = testing::sphere();
  CHECK(is_feasible(vec({0, 2.5, 0}), p, 1e-9));
  CHECK_FALSE(is_feasible(vec({0, 0, 0}), p, 1e-2));
  CHECK(is_feasible(vec({0.5, 0.5}), testing::free_box(), 0.0));
  CHECK_FALSE(is_feasible(vec({1.5, 0.5}), testing::free_box(), 0.0));
}

TEST_CASE("finite differences match analytic Jacobians on every benchmark") {
  for (const std::string name : {"disks-connected", "disks-disconnected", "seven-lobes", "sine", "swiss-roll",
                                 "stress:d=8,m=5", "mp-grid", "mp-random"}) {
    CAPTURE(name);
    const auto bench = benchmarks::make_benchmark(name);
    const auto& p = bench.problem;
    Rng rng = make_stream(11, name);
    int checked = 0;
    for (int i = 0; i < 100; ++i) {
      Vector x(p.dim);
      for (int j = 0; j < p.dim; ++j) x[j] = std::uniform_real_distribution<double>(p.lo[j], p.hi[j])(rng);
      if (p.jac_h) {
        const Matrix a = p.jac_h(x);
        const Matrix f = finite_difference_jacobian(p.eval_h, x, p.num_eq);
        // Skip points where a piecewise branch switches inside the stencil.
        if ((a - f).norm() <= 1e-4 * std::max(1.0, a.norm())) ++checked;
      }
      if (p.jac_g) {
        const Matrix a = p.jac_g(x);
        const Matrix f = finite_difference_jacobian(p.eval_g, x, p.num_ineq);
        if ((a - f).norm() <= 1e-4 * std::max(1.0, a.norm())) ++checked;
      }
    }
    const int expected = 100 * ((p.jac_h ? 1 : 0) + (p.jac_g ? 1 : 0));
    CHECK(checked >= expected - 3);
  }
}

TEST_CASE("problem validation") {
  auto p = testing::sphere();
  p.lo[0] = 6.0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  auto q = testing::sphere();
  q.intrinsic_dim_hint = 1;
  CHECK_THROWS_AS(q.validate(), ConfigError);
}
