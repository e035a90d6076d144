#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "masem/benchmarks.hpp"
#include "masem/projection.hpp"
#include "support.hpp"

using namespace masem;
using testing::vec;

namespace {
ProjectionConfig quiet() {
  ProjectionConfig c;
  c.noise_scale = 0.0;
  return c;
}
}  // namespace

TEST_CASE("sphere projection lands on the ray") {
  Rng rng = make_stream(0, "test");
  const auto res = gauss_newton_project(vec({1, 0, 0}), testing::sphere(), quiet(), rng);
  CHECK(res.converged);
  CHECK(res.x[0] == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(std::abs(res.x[1]) < 1e-15);
  CHECK(slack(res.x, testing::sphere()).max_violation <= 1e-9);
}

TEST_CASE("feasible start is a fixed point") {
  Rng rng = make_stream(0, "test");
  const Vector x0 = vec({0, 2.5, 0});
  const auto res = gauss_newton_project(x0, testing::sphere(), quiet(), rng);
  CHECK(res.converged);
  CHECK(res.steps_used == 0);
  CHECK(res.x == x0);
}

TEST_CASE("no constraints clamps only") {
  Rng rng = make_stream(0, "test");
  const auto res = gauss_newton_project(vec({3, -0.5}), testing::free_box(), quiet(), rng);
  CHECK(res.converged);
  CHECK(res.x == vec({1, 0}));
}

TEST_CASE("noise-free slack never increases") {
  const auto bench = benchmarks::make_seven_lobes();
  Rng rng = make_stream(4, "test");
  for (int trial = 0; trial < 20; ++trial) {
    Vector x = normal_vector(rng, 2, 2.0);
    double prev = slack(x, bench.problem).value;
    ProjectionConfig one = quiet();
    one.max_steps = 1;
    for (int s = 0; s < 30; ++s) {
      x = gauss_newton_project(x, bench.problem, one, rng).x;
      const double now = slack(x, bench.problem).value;
      CHECK(now <= prev + 1e-15);
      prev = now;
    }
    CHECK(within_bounds(x, bench.problem));
  }
}

TEST_CASE("projection is deterministic") {
  const auto bench = benchmarks::make_sine();
  Rng a = make_stream(9, "p");
  Rng b = make_stream(9, "p");
  ProjectionConfig cfg;
  const auto ra = gauss_newton_project(vec({3.3, 5.0}), bench.problem, cfg, a);
  const auto rb = gauss_newton_project(vec({3.3, 5.0}), bench.problem, cfg, b);
  CHECK(ra.x == rb.x);
  CHECK(ra.steps_used == rb.steps_used);
}

TEST_CASE("initialization scale is a quarter of the mean bound width") {
  CHECK(initialization_scale(testing::sphere()) == doctest::Approx(2.5));
}

TEST_CASE("initialized sphere particles are feasible") {
  const auto ens = initialize_ensemble(testing::sphere(), 100, 1);
  CHECK(ens.size() == 100);
  CHECK(max_max_violation(ens) <= 1e-6);
  CHECK(initialize_ensemble(testing::sphere(), 1, 1).size() == 1);
}

TEST_CASE("initialization hits both disconnected disks") {
  const auto bench = benchmarks::make_disks(false);
  int both = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto ens = initialize_ensemble(bench.problem, 500, seed);
    int counts[2] = {0, 0};
    for (Eigen::Index i = 0; i < ens.size(); ++i) {
      if (slack(ens.position(i), bench.problem).max_violation > 1e-6) continue;
      ++counts[bench.problem.component_of(ens.position(i))];
    }
    both += (counts[0] > 0 && counts[1] > 0) ? 1 : 0;
  }
  CHECK(both >= 99);
}

TEST_CASE("projection config validation") {
  ProjectionConfig c;
  c.max_steps = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.damping = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}
