#include "masem/projection.hpp"

#include "masem/parallel.hpp"

#include <cmath>

namespace masem {

void ProjectionConfig::validate() const {
  if (max_steps < 1) throw ConfigError("projection max_steps must be >= 1");
  if (!(tol >= 0.0)) throw ConfigError("projection tol must be >= 0");
  if (!(damping > 0.0)) throw ConfigError("projection damping must be > 0");
  if (!(noise_scale >= 0.0)) throw ConfigError("projection noise_scale must be >= 0");
  if (!(step_scale > 0.0 && step_scale <= 1.0)) throw ConfigError("projection step_scale must lie in (0, 1]");
}

Vector gauss_newton_direction(const Linearization& lin, double damping) {
  const Matrix& J = lin.jacobian;
  const Eigen::Index rows = J.rows();
  const Eigen::Index cols = J.cols();
  if (rows == 0) return Vector::Zero(cols);
  Vector delta;
  if (rows < cols) {
    // J^T (J J^T + lambda I)^{-1} r equals the (J^T J + lambda I)^{-1} J^T r step.
    Matrix gram = J * J.transpose();
    gram.diagonal().array() += damping;
    delta = J.transpose() * gram.ldlt().solve(lin.residual);
  } else {
    Matrix normal = J.transpose() * J;
    normal.diagonal().array() += damping;
    delta = normal.ldlt().solve(J.transpose() * lin.residual);
  }
  if (!delta.allFinite()) throw NumericalError("Gauss-Newton normal equations produced a non-finite step");
  return delta;
}

ProjectionResult gauss_newton_project(const Vector& x0, const ConstraintProblem& problem,
                                      const ProjectionConfig& cfg, Rng& rng) {
  cfg.validate();
  ProjectionResult out;
  out.x = clamp_to_bounds(x0, problem);
  Linearization lin = residual_and_jacobian(out.x, problem);

  while (true) {
    if (lin.slack.max_violation <= cfg.tol) {
      out.converged = true;
      return out;
    }
    if (out.steps_used >= cfg.max_steps) return out;

    if (cfg.noise_scale > 0.0) {
      const Vector y = out.x + normal_vector(rng, problem.dim, cfg.noise_scale);
      const Linearization at_y = residual_and_jacobian(y, problem);
      out.x = clamp_to_bounds(y - cfg.step_scale * gauss_newton_direction(at_y, cfg.damping), problem);
      lin = residual_and_jacobian(out.x, problem);
    } else {
      const Vector delta = gauss_newton_direction(lin, cfg.damping);
      double step = cfg.step_scale;
      bool accepted = false;
      for (int halving = 0; halving <= 30; ++halving, step *= 0.5) {
        Vector candidate = clamp_to_bounds(out.x - step * delta, problem);
        if (candidate == out.x) break;
        if (slack(candidate, problem).value <= lin.slack.value) {
          out.x = std::move(candidate);
          accepted = true;
          break;
        }
      }
      if (!accepted) return out;
      lin = residual_and_jacobian(out.x, problem);
    }
    ++out.steps_used;
  }
}

double initialization_scale(const ConstraintProblem& problem) {
  return 0.25 * (problem.hi - problem.lo).mean();
}

ParticleEnsemble initialize_ensemble(const ConstraintProblem& problem, int n, std::uint64_t seed,
                                     const ProjectionConfig& cfg) {
  if (n < 1) throw InputError("ensemble size must be >= 1");
  problem.validate();
  cfg.validate();
  const double sigma = initialization_scale(problem);
  ProjectionConfig polish = cfg;
  polish.noise_scale = 0.0;

  Points positions(n, problem.dim);
  parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
    Rng rng = make_stream(seed, "init", i);
    Vector x = normal_vector(rng, problem.dim, sigma);
    if (cfg.noise_scale > 0.0) x = gauss_newton_project(x, problem, cfg, rng).x;
    x = gauss_newton_project(x, problem, polish, rng).x;
    positions.row(static_cast<Eigen::Index>(i)) = x.transpose();
  });
  return make_ensemble(positions, problem, seed);
}

}  // namespace masem
