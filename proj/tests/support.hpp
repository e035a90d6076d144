#pragma once

#include "masem/constraint.hpp"

#include <cmath>

namespace testing {

using masem::ConstraintProblem;
using masem::Matrix;
using masem::Vector;

/// |x| = radius in R^d, box [-box, box]^d.
inline ConstraintProblem sphere(int d = 3, double radius = 2.5, double box = 5.0, bool analytic = true) {
  ConstraintProblem p;
  p.name = "sphere";
  p.dim = d;
  p.num_eq = 1;
  p.eval_h = [radius](const Vector& x) { return Vector::Constant(1, x.norm() - radius); };
  if (analytic) {
    p.jac_h = [d](const Vector& x) {
      Matrix J = Matrix::Zero(1, d);
      if (x.norm() > 0) J.row(0) = x.transpose() / x.norm();
      return J;
    };
  }
  p.lo = Vector::Constant(d, -box);
  p.hi = Vector::Constant(d, box);
  p.intrinsic_dim_hint = d - 1;
  return p;
}

/// Box only.
inline ConstraintProblem free_box(int d = 2, double lo = 0.0, double hi = 1.0) {
  ConstraintProblem p;
  p.name = "box";
  p.dim = d;
  p.lo = Vector::Constant(d, lo);
  p.hi = Vector::Constant(d, hi);
  p.intrinsic_dim_hint = d;
  return p;
}

/// h(x) = x_1 - 1 in R^2.
inline ConstraintProblem shifted_line() {
  ConstraintProblem p = free_box(2, -5.0, 5.0);
  p.name = "line";
  p.num_eq = 1;
  p.eval_h = [](const Vector& x) { return Vector::Constant(1, x[0] - 1.0); };
  p.jac_h = [](const Vector&) {
    Matrix J(1, 2);
    J << 1.0, 0.0;
    return J;
  };
  p.intrinsic_dim_hint = 1;
  return p;
}

/// g(x) = x_1 <= 0 in R^2.
inline ConstraintProblem halfplane() {
  ConstraintProblem p = free_box(2, -5.0, 5.0);
  p.name = "halfplane";
  p.num_ineq = 1;
  p.eval_g = [](const Vector& x) { return Vector::Constant(1, x[0]); };
  p.jac_g = [](const Vector&) {
    Matrix J(1, 2);
    J << 1.0, 0.0;
    return J;
  };
  return p;
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

}  // namespace testing
