#pragma once

#include "masem/common.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <string>

namespace masem {

using VectorMap = std::function<Vector(const Vector&)>;
using JacobianMap = std::function<Matrix(const Vector&)>;

/// Exact sampler from the uniform distribution on a problem's feasible set.
struct GroundTruthSampler {
  std::function<Points(std::size_t n, Rng& rng)> sample;
  std::string description;
};

/// Implicit feasible set {h(x) = 0, g(x) <= 0, lo <= x <= hi}.
///
/// Immutable after construction; every member is safe to call concurrently.
/// Missing Jacobians fall back to central finite differences.
struct ConstraintProblem {
  std::string name;
  int dim = 0;
  int num_eq = 0;
  int num_ineq = 0;
  VectorMap eval_h;
  VectorMap eval_g;
  JacobianMap jac_h;
  JacobianMap jac_g;
  Vector lo;
  Vector hi;
  std::optional<int> intrinsic_dim_hint;
  std::shared_ptr<const GroundTruthSampler> ground_truth;
  /// Component index of a (near-)feasible point, or -1 when unassigned.
  std::function<int(const Vector&)> component_of;
  /// Target component masses (uniform measure); empty when unknown.
  Vector component_masses;
  /// Upper clip for pairwise-distance histograms (infinity-norm diameter).
  std::optional<double> kl_clip;

  /// Throws ConfigError when the definition is inconsistent.
  void validate() const;
};

struct SlackValue {
  double value = 0.0;          ///< 0.5 * (|g(x)_+|^2 + |h(x)|^2)
  double max_violation = 0.0;  ///< max(|h_j(x)|, g_i(x)_+)
};

/// Stacked residual of the equalities followed by the strictly violated
/// inequalities, with matching Jacobian rows.
struct Linearization {
  Vector residual;
  Matrix jacobian;
  SlackValue slack;
};

Vector evaluate_h(const ConstraintProblem& problem, const Vector& x);
Vector evaluate_g(const ConstraintProblem& problem, const Vector& x);
Matrix jacobian_h(const ConstraintProblem& problem, const Vector& x);
Matrix jacobian_g(const ConstraintProblem& problem, const Vector& x);

/// Central differences with step 1e-6 * (1 + |x_j|).
Matrix finite_difference_jacobian(const VectorMap& f, const Vector& x, int rows);

SlackValue slack(const Vector& x, const ConstraintProblem& problem);
SlackValue slack_from_values(const Vector& h, const Vector& g);

Linearization residual_and_jacobian(const Vector& x, const ConstraintProblem& problem);

Vector clamp_to_bounds(const Vector& x, const ConstraintProblem& problem);
bool within_bounds(const Vector& x, const ConstraintProblem& problem);
bool is_feasible(const Vector& x, const ConstraintProblem& problem, double tol);

}  // namespace masem
