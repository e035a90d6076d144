#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "masem/benchmarks.hpp"
#include "masem/metrics.hpp"
#include "support.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

using namespace masem;
using namespace masem::metrics;
using testing::vec;

namespace {

Points grid_points(int side, double spacing) {
  Points X(side * side, 2);
  for (int i = 0; i < side; ++i) {
    for (int j = 0; j < side; ++j) X.row(i * side + j) << i * spacing, j * spacing;
  }
  return X;
}

Points uniform_square(int n, Rng& rng) {
  Points X(n, 2);
  for (int i = 0; i < n; ++i) X.row(i) << uniform01(rng), uniform01(rng);
  return X;
}

ConstraintProblem two_labels() {
  auto p = testing::free_box(1, -5, 5);
  p.component_of = [](const Vector& x) { return x[0] < 0 ? 0 : 1; };
  p.component_masses = vec({0.5, 0.5});
  return p;
}

}  // namespace

TEST_CASE("sinkhorn on identical sets") {
  const Points X = grid_points(10, 1.0);
  const auto res = sinkhorn_w22(X, X, 1e-3);
  CHECK(res.cost <= 1e-6);
  CHECK(res.cost >= 0.0);
}

TEST_CASE("sinkhorn single pair") {
  Points X(1, 2), Y(1, 2);
  X << 0, 0;
  Y << 1, 0;
  const auto res = sinkhorn_w22(X, Y, 1e-3);
  CHECK(std::abs(res.cost - 1.0) <= 1e-9);
  CHECK(res.converged);
}

TEST_CASE("sinkhorn rigid shift") {
  Rng rng = make_stream(0, "shift");
  const Points X = uniform_square(100, rng);
  Points Y = X;
  Y.col(0).array() += 0.3;
  Y.col(1).array() -= 0.1;
  const auto res = sinkhorn_w22(X, Y, 1e-3);
  CHECK(res.cost == doctest::Approx(0.1).epsilon(0.02));
}

TEST_CASE("sinkhorn symmetry and rotation invariance") {
  Rng rng = make_stream(1, "sym");
  const Points X = uniform_square(80, rng);
  const Points Y = uniform_square(80, rng);
  const double xy = sinkhorn_w22(X, Y, 1e-2).cost;
  CHECK(sinkhorn_w22(Y, X, 1e-2).cost == doctest::Approx(xy).epsilon(1e-4));
  const double a = 0.7;
  Matrix R(2, 2);
  R << std::cos(a), -std::sin(a), std::sin(a), std::cos(a);
  const Points XR = X * R.transpose();
  const Points YR = Y * R.transpose();
  CHECK(sinkhorn_w22(XR, YR, 1e-2).cost == doctest::Approx(xy).epsilon(1e-6));
}

TEST_CASE("default regularization scales with the data") {
  Points X(2, 1), Y(2, 1);
  X << 0, 1;
  Y << 0, 3;
  // squared distances {0, 9, 1, 4}, median 2.5
  CHECK(median_squared_distance(X, Y) == doctest::Approx(2.5));
  CHECK(default_sinkhorn_reg(X, Y) == doctest::Approx(2.5e-3));
  CHECK(default_sinkhorn_reg(Points::Zero(3, 2), Points::Zero(3, 2)) == 1e-12);
}

TEST_CASE("pairwise kl") {
  Rng rng = make_stream(2, "kl");
  const Points X = uniform_square(300, rng);
  CHECK(pairwise_kl(X, X, 1.5) == doctest::Approx(0.0));
  const Vector h = pairwise_distance_histogram(X, 1.5);
  CHECK(h.size() == 50);
  CHECK(h.sum() == doctest::Approx(1.0));
  const Points tight = X * 0.05;
  CHECK(pairwise_kl(X, tight, 1.5) > 1.0);
}

TEST_CASE("kozachenko-leonenko entropy on the unit square") {
  Rng rng = make_stream(0, "uniform");
  const Points X = uniform_square(2000, rng);
  CHECK(std::abs(kl_entropy(X, 4)) <= 0.15);
}

TEST_CASE("feasible entropy") {
  const auto p = testing::free_box(2, 0, 1);
  Rng rng = make_stream(0, "uniform");
  const Points X = uniform_square(400, rng);
  Rng r1 = make_stream(0, "fe");
  const auto base = feasible_entropy(X, p, 1e-5, r1);
  REQUIRE(base.has_value());
  Points dup(800, 2);
  dup << X, X;
  Rng r2 = make_stream(0, "fe");
  const auto doubled = feasible_entropy(dup, p, 1e-5, r2);
  REQUIRE(doubled.has_value());
  CHECK(*doubled < *base);

  const auto sphere = testing::sphere();
  Rng r3 = make_stream(0, "fe");
  CHECK_FALSE(feasible_entropy(Points::Zero(150, 3), sphere, 1e-5, r3).has_value());
}

TEST_CASE("tv over components") {
  const auto p = two_labels();
  Points all_left(10, 1);
  all_left.setConstant(-1.0);
  CHECK(tv_components(all_left, p) == doctest::Approx(0.5));
  Points even(10, 1);
  for (int i = 0; i < 10; ++i) even(i, 0) = i < 5 ? -1.0 : 1.0;
  CHECK(tv_components(even, p) == doctest::Approx(0.0));
  CHECK_THROWS_AS(tv_components(Points(0, 1), p), InputError);
  CHECK_THROWS_AS(tv_components(even, testing::free_box(1, -5, 5)), UnsupportedError);
}

TEST_CASE("homotopy entropy") {
  const std::vector<benchmarks::Obstacle> obs{{Eigen::Vector2d(0.0, 0.0), 0.5}};
  auto path = [](double y) {
    Points P(3, 2);
    P << -2, 0, 0, y, 2, 0;
    return P;
  };
  CHECK(homotopy_signature(path(1.0), obs) != homotopy_signature(path(-1.0), obs));
  CHECK(homotopy_entropy({path(1.0), path(1.0), path(1.2)}, obs) == doctest::Approx(0.0));
  CHECK(homotopy_entropy({path(1.0), path(-1.0)}, obs) == doctest::Approx(std::log(2.0)));

  std::vector<benchmarks::Obstacle> three{{Eigen::Vector2d(-1.0, 0.0), 0.2}, {Eigen::Vector2d(1.0, 0.0), 0.2}};
  auto zig = [](double a, double b) {
    Points P(5, 2);
    P << -2, 0, -1, a, 0, 0, 1, b, 2, 0;
    return P;
  };
  CHECK(homotopy_entropy({zig(1, 1), zig(1, -1), zig(-1, 1), zig(-1, -1)}, three) == doctest::Approx(std::log(4.0)));
}

TEST_CASE("mean max slack") {
  const auto p = testing::sphere();
  CHECK(mean_max_slack(Points::Zero(1, 3), p) == doctest::Approx(2.5));
  Points on(2, 3);
  on << 2.5, 0, 0, 0, 0, -2.5;
  CHECK(mean_max_slack(on, p) == 0.0);
}

TEST_CASE("energy distance") {
  Rng rng = make_stream(5, "e");
  const Points X = uniform_square(200, rng);
  CHECK(energy_distance(X, X) == doctest::Approx(0.0));
  Points Y = X;
  Y.array() += 3.0;
  CHECK(energy_distance(X, Y) > 1.0);
}

TEST_CASE("welch test") {
  const std::vector<double> a{5.1, 4.9, 5.3, 5.0, 5.2, 4.8};
  const std::vector<double> b{3.0, 3.2, 2.9, 3.1, 2.8, 3.3};
  const auto r = welch_test(a, b);
  CHECK(r.mean_difference == doctest::Approx(2.0));
  CHECK(r.p_value < 1e-6);
  CHECK(r.ci_low < 2.0);
  CHECK(r.ci_high > 2.0);
  // reference values from the textbook formula
  CHECK(r.df == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(r.t == doctest::Approx(2.0 / std::sqrt(0.035 / 6 + 0.035 / 6)).epsilon(1e-9));
  const auto same = welch_test(a, a);
  CHECK(same.p_value == doctest::Approx(1.0));
}

TEST_CASE("uniform disk samples stay in the annulus") {
  Rng rng = make_stream(0, "disk");
  const Points X = uniform_disk(5000, 0.2, 1.0, rng);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    CHECK(X.row(i).norm() >= 0.2);
    CHECK(X.row(i).norm() <= 1.0);
  }
  // area fraction inside radius 0.6: (0.36 - 0.04) / (1 - 0.04)
  int inner = 0;
  for (Eigen::Index i = 0; i < X.rows(); ++i) inner += X.row(i).norm() < 0.6 ? 1 : 0;
  CHECK(inner / 5000.0 == doctest::Approx(0.32 / 0.96).epsilon(0.05));
}

TEST_CASE("uniform disk entropy beats center-biased samples") {
  // Same sample before and after swapping 50 points for center-concentrated ones.
  Rng rng = make_stream(0, "biased-disk");
  int wins = 0;
  const int trials = 40;
  for (int t = 0; t < trials; ++t) {
    const Points uniform = uniform_disk(500, 0.0, 1.0, rng);
    Points biased = uniform;
    biased.topRows(50) = uniform_disk(50, 0.0, 0.1, rng);
    wins += kl_entropy(uniform, 4) > kl_entropy(biased, 4) ? 1 : 0;
  }
  CHECK(wins >= 0.95 * trials);
}

TEST_CASE("metric report json") {
  MetricReport r;
  r.problem = "sine";
  r.method = "nhr";
  r.seed = 3;
  r.n = 10;
  r.iteration = 2;
  r.kernel_steps = 20;
  r.values["mean_max_slack"] = 0.5;
  r.values["sinkhorn_w22"] = std::numeric_limits<double>::infinity();
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["schema_version"] == 1);
  CHECK(j["problem"] == "sine");
  CHECK(j["metrics"]["mean_max_slack"] == 0.5);
  CHECK(j["metrics"]["sinkhorn_w22"].is_string());
  CHECK_FALSE(j["metrics"].contains("pairwise_kl"));
  CHECK(r.to_json() == r.to_json());
}

TEST_CASE("evaluate skips inapplicable metrics") {
  const auto b = benchmarks::make_seven_lobes();
  Rng rng = make_stream(0, "gt");
  const Points gt = benchmarks::ground_truth(b.problem, 200, rng);
  EvaluationContext ctx{&b.problem, &gt, nullptr, 0};
  const auto vals = evaluate(gt, metric_names(), ctx);
  CHECK(vals.count("mean_max_slack") == 1);
  CHECK(vals.at("mean_max_slack") <= 1e-9);
  CHECK(vals.count("pairwise_kl") == 1);
  CHECK(vals.count("sinkhorn_w22") == 1);
  CHECK(vals.count("homotopy_entropy") == 0);
  CHECK(vals.count("tv_components") == 0);
}
