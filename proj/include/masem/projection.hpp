#pragma once

#include "masem/ensemble.hpp"

namespace masem {

/// Gauss-Newton settings for descending the squared slack.
struct ProjectionConfig {
  int max_steps = 500;
  double tol = 1e-9;          ///< on max_violation
  double damping = 1e-8;      ///< Levenberg term added to the normal equations
  double noise_scale = 0.01;  ///< std of Gaussian noise injected before each step
  double step_scale = 1.0;

  void validate() const;
};

struct ProjectionResult {
  Vector x;
  bool converged = false;
  int steps_used = 0;
};

/// Solves (J^T J + damping I) delta = J^T r, via the smaller of the two
/// equivalent normal systems.
Vector gauss_newton_direction(const Linearization& lin, double damping);

/// Iterates x <- clamp(x + eta - step * delta(x + eta)) until the max
/// violation drops to `tol`. Without noise every accepted step must not
/// increase the slack; the step is halved up to 30 times, after which the
/// projection gives up with converged = false.
ProjectionResult gauss_newton_project(const Vector& x0, const ConstraintProblem& problem,
                                      const ProjectionConfig& cfg, Rng& rng);

/// Gaussian draws with sigma = mean bound width / 4, projected with `cfg`
/// (noisy phase) followed by a noise-free polish. Kernel streams for the
/// returned ensemble derive from `seed`.
ParticleEnsemble initialize_ensemble(const ConstraintProblem& problem, int n, std::uint64_t seed,
                                     const ProjectionConfig& cfg = {});

double initialization_scale(const ConstraintProblem& problem);

}  // namespace masem
