#pragma once

#include "masem/constraint.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace masem::benchmarks {

struct Obstacle {
  Eigen::Vector2d center;
  double radius = 0.0;
};

enum class PlanningLayout { Grid4x4, Random20 };

struct MotionPlanningSpec {
  PlanningLayout layout = PlanningLayout::Grid4x4;
  int n_waypoints = 3;
  int samples = 40;  ///< discretization count T
  double speed_limit = 1.0;
  double accel_limit = 0.65;
  double goal_x = 3.6;
  Eigen::Vector2d start{-3.6, 0.0};
  double workspace = 4.0;  ///< waypoints live in [-workspace, workspace]^2
  std::uint64_t layout_seed = 0;
};

/// Cubic B-spline path through [start; waypoints] and its obstacle course.
///
/// The path is linear in the waypoints: p_t = S(t, 0) * start + sum_j S(t, j) * X_j,
/// with S = E * pinv(B) where B evaluates the spline basis at the
/// interpolation knots and E at the T sample parameters t / T.
class PlanningModel {
 public:
  PlanningModel(const MotionPlanningSpec& spec, std::vector<Obstacle> obstacles);

  const MotionPlanningSpec& spec() const { return spec_; }
  const std::vector<Obstacle>& obstacles() const { return obstacles_; }
  /// samples x (n_waypoints + 1)
  const Matrix& path_matrix() const { return path_matrix_; }
  /// Basis matrix evaluated at the interpolation knots (n_waypoints+1 square).
  const Matrix& interpolation_matrix() const { return interpolation_; }

  /// Control points recovered from [start; waypoints].
  Matrix control_points(const Vector& x) const;
  /// Evaluates the spline for the given control points at parameter u in [0, 1].
  Eigen::Vector2d evaluate(const Matrix& control_points, double u) const;

  /// Discretized path, start included: (samples + 1) x 2.
  Points path(const Vector& x) const;

  Vector inequalities(const Vector& x) const;
  Matrix inequality_jacobian(const Vector& x) const;
  int num_inequalities() const;

 private:
  Matrix basis_row(double u) const;

  MotionPlanningSpec spec_;
  std::vector<Obstacle> obstacles_;
  std::vector<double> knots_;
  Matrix interpolation_;
  Matrix path_matrix_;
};

struct StressTestSpec {
  int d = 8;
  int m = 5;
  int n_cutouts = 5;
  int n_components = 5;
  std::uint64_t layout_seed = 0;
};

/// Sphere layout of the stress test in latent coordinates z = N^T x.
struct StressLayout {
  Matrix constraint_rows;  ///< A, (m-1) x d, orthonormal rows
  Matrix nullspace;        ///< N, d x p, orthonormal columns
  std::vector<Vector> centers;
  std::vector<double> radii;
  std::vector<Vector> cutout_centers;
  std::vector<double> cutout_radii;
  std::vector<int> cutout_component;
};

/// Grid of disks used for the component-loss experiment.
struct DiskGrid {
  int rows = 10;
  int cols = 10;
  double spacing = 5.0;
  double radius = 1.0;

  Eigen::Vector2d center(int component) const;
  int nearest(const Eigen::Vector2d& x) const;
  int size() const { return rows * cols; }
};

struct Benchmark {
  ConstraintProblem problem;
  std::shared_ptr<const PlanningModel> planning;
  std::shared_ptr<const StressLayout> stress;
};

Benchmark make_disks(bool connected);
Benchmark make_seven_lobes();
Benchmark make_sine();
Benchmark make_swiss_roll(std::uint64_t layout_seed = 0);
Benchmark make_stress_test(const StressTestSpec& spec);
Benchmark make_motion_planning(const MotionPlanningSpec& spec);
Benchmark make_grasping();
Benchmark make_disk_grid(const DiskGrid& grid = {});

/// Problems addressable by name: disks-connected, disks-disconnected,
/// seven-lobes, sine, swiss-roll, stress:d=<d>,m=<m>, mp-grid, mp-random,
/// grasping (plus disk-grid for the component-loss experiment).
Benchmark make_benchmark(std::string_view name);
std::vector<std::string> problem_names();

/// Uniform samples from the feasible set; UnsupportedError when the problem
/// has no exact sampler.
Points ground_truth(const ConstraintProblem& problem, std::size_t n, Rng& rng);

/// Cap-area masses of the two disks: (1 - cos rho_i) / sum.
Vector disk_cap_masses();

/// Arclength element of the seven-lobes curve at polar angle theta.
double seven_lobes_speed(double theta);
/// Point of the seven-lobes curve at polar angle theta.
Eigen::Vector2d seven_lobes_point(double theta);

}  // namespace masem::benchmarks
