#include "masem/constraint.hpp"

#include <algorithm>
#include <cmath>

namespace masem {

namespace {

void check_point(const ConstraintProblem& problem, const Vector& x) {
  if (x.size() != problem.dim) {
    throw InputError("point has length " + std::to_string(x.size()) + ", problem '" + problem.name +
                     "' expects " + std::to_string(problem.dim));
  }
}

void check_finite(const Vector& v, const char* what) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw EvaluationError(std::string("non-finite ") + what, static_cast<int>(i));
  }
}

Vector evaluate(const VectorMap& f, int rows, const Vector& x, const char* what) {
  if (rows == 0) return Vector(0);
  Vector v = f(x);
  if (v.size() != rows) {
    throw InputError(std::string(what) + " returned " + std::to_string(v.size()) + " values, expected " +
                     std::to_string(rows));
  }
  check_finite(v, what);
  return v;
}

Matrix evaluate_jacobian(const VectorMap& f, const JacobianMap& jac, int rows, const Vector& x,
                         const char* what) {
  if (rows == 0) return Matrix(0, x.size());
  Matrix J = jac ? jac(x) : finite_difference_jacobian(f, x, rows);
  if (J.rows() != rows || J.cols() != x.size()) {
    throw InputError(std::string(what) + " Jacobian has wrong shape");
  }
  for (Eigen::Index i = 0; i < J.rows(); ++i) {
    for (Eigen::Index j = 0; j < J.cols(); ++j) {
      if (!std::isfinite(J(i, j))) throw EvaluationError(std::string("non-finite ") + what + " Jacobian", static_cast<int>(i));
    }
  }
  return J;
}

}  // namespace

void ConstraintProblem::validate() const {
  if (dim <= 0) throw ConfigError("problem dimension must be positive");
  if (num_eq < 0 || num_ineq < 0) throw ConfigError("constraint counts must be nonnegative");
  if (num_eq > 0 && !eval_h) throw ConfigError("equality map missing");
  if (num_ineq > 0 && !eval_g) throw ConfigError("inequality map missing");
  if (lo.size() != dim || hi.size() != dim) throw ConfigError("bounds must have length dim");
  for (int j = 0; j < dim; ++j) {
    if (!(lo[j] < hi[j])) throw ConfigError("bounds require lo < hi on every axis");
  }
  if (intrinsic_dim_hint && *intrinsic_dim_hint != dim - num_eq) {
    throw ConfigError("intrinsic dimension hint must equal dim - num_eq");
  }
}

Vector evaluate_h(const ConstraintProblem& problem, const Vector& x) {
  check_point(problem, x);
  return evaluate(problem.eval_h, problem.num_eq, x, "equality constraint");
}

Vector evaluate_g(const ConstraintProblem& problem, const Vector& x) {
  check_point(problem, x);
  return evaluate(problem.eval_g, problem.num_ineq, x, "inequality constraint");
}

Matrix jacobian_h(const ConstraintProblem& problem, const Vector& x) {
  check_point(problem, x);
  return evaluate_jacobian(problem.eval_h, problem.jac_h, problem.num_eq, x, "equality constraint");
}

Matrix jacobian_g(const ConstraintProblem& problem, const Vector& x) {
  check_point(problem, x);
  return evaluate_jacobian(problem.eval_g, problem.jac_g, problem.num_ineq, x, "inequality constraint");
}

Matrix finite_difference_jacobian(const VectorMap& f, const Vector& x, int rows) {
  Matrix J(rows, x.size());
  Vector probe = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double step = 1e-6 * (1.0 + std::abs(x[j]));
    probe[j] = x[j] + step;
    Vector up = f(probe);
    probe[j] = x[j] - step;
    Vector down = f(probe);
    probe[j] = x[j];
    J.col(j) = (up - down) / (2.0 * step);
  }
  return J;
}

SlackValue slack_from_values(const Vector& h, const Vector& g) {
  SlackValue s;
  double sq = 0.0;
  for (Eigen::Index j = 0; j < h.size(); ++j) {
    sq += h[j] * h[j];
    s.max_violation = std::max(s.max_violation, std::abs(h[j]));
  }
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (g[i] > 0.0) {
      sq += g[i] * g[i];
      s.max_violation = std::max(s.max_violation, g[i]);
    }
  }
  s.value = 0.5 * sq;
  return s;
}

SlackValue slack(const Vector& x, const ConstraintProblem& problem) {
  return slack_from_values(evaluate_h(problem, x), evaluate_g(problem, x));
}

Linearization residual_and_jacobian(const Vector& x, const ConstraintProblem& problem) {
  const Vector h = evaluate_h(problem, x);
  const Vector g = evaluate_g(problem, x);
  Linearization lin;
  lin.slack = slack_from_values(h, g);

  int active = 0;
  for (Eigen::Index i = 0; i < g.size(); ++i) active += g[i] > 0.0 ? 1 : 0;

  const int rows = problem.num_eq + active;
  lin.residual.resize(rows);
  lin.jacobian.resize(rows, problem.dim);
  if (problem.num_eq > 0) {
    lin.residual.head(problem.num_eq) = h;
    lin.jacobian.topRows(problem.num_eq) = jacobian_h(problem, x);
  }
  if (active > 0) {
    const Matrix Jg = jacobian_g(problem, x);
    int row = problem.num_eq;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      if (g[i] > 0.0) {
        lin.residual[row] = g[i];
        lin.jacobian.row(row) = Jg.row(i);
        ++row;
      }
    }
  }
  return lin;
}

Vector clamp_to_bounds(const Vector& x, const ConstraintProblem& problem) {
  check_point(problem, x);
  return x.cwiseMax(problem.lo).cwiseMin(problem.hi);
}

bool within_bounds(const Vector& x, const ConstraintProblem& problem) {
  check_point(problem, x);
  return (x.array() >= problem.lo.array()).all() && (x.array() <= problem.hi.array()).all();
}

bool is_feasible(const Vector& x, const ConstraintProblem& problem, double tol) {
  if (tol < 0.0) throw InputError("feasibility tolerance must be nonnegative");
  return within_bounds(x, problem) && slack(x, problem).max_violation <= tol;
}

}  // namespace masem
