#pragma once

#include "masem/projection.hpp"

#include <functional>
#include <vector>

namespace masem {

enum class KernelKind { NHR, OLLA };

struct KernelConfig {
  KernelKind kind = KernelKind::NHR;

  // Nonlinear hit-and-run.
  double nhr_max_step = 1.0;
  ProjectionConfig nhr_project{.max_steps = 50, .tol = 1e-8, .damping = 1e-8, .noise_scale = 0.0, .step_scale = 1.0};

  // Landing Langevin.
  double olla_step_size = 1e-3;
  double olla_landing_gain = 1.0;
  double olla_barrier_weight = 0.0;
  int hutchinson_probes = 1;

  void validate() const;
};

/// One nonlinear hit-and-run move: uniform direction, uniform signed step
/// length in [-max_step, max_step], Gauss-Newton re-projection. Proposals
/// leaving the box or failing to project are rejected (x is returned).
Vector nhr_transition(const Vector& x, const ConstraintProblem& problem, const KernelConfig& cfg, Rng& rng);

/// One overdamped Langevin step with a landing drift toward h = 0, noise
/// projected on the tangent space of the equality constraints, an optional
/// penalty drift on violated inequalities and a Hutchinson estimate of the
/// divergence of the tangent projector.
Vector olla_transition(const Vector& x, const ConstraintProblem& problem, const KernelConfig& cfg, Rng& rng);

/// Applies one transition of the configured kernel to every particle.
void kernel_step(ParticleEnsemble& ensemble, const ConstraintProblem& problem, const KernelConfig& cfg);

/// Tangent projector I - J^T (J J^T + damping I)^{-1} J of the equalities.
Matrix tangent_projector(const Matrix& jac_h, double damping);

// --- Sequentially constrained Monte Carlo -------------------------------

struct ScmcConfig {
  int moves_per_stage = 5;
  double target_acceptance = 0.3;
  bool project_at_end = true;
  ProjectionConfig final_projection{.max_steps = 500, .tol = 1e-9, .damping = 1e-8, .noise_scale = 0.0, .step_scale = 1.0};
};

struct ScmcStage {
  int stage = 0;
  double beta = 0.0;
  double ess = 0.0;
  double acceptance = 0.0;
  double proposal_scale = 0.0;
  double mean_max_violation = 0.0;
};

struct ScmcResult {
  ParticleEnsemble ensemble;  ///< after the final projection pass
  Points pre_projection;      ///< annealed particles before projection
  std::vector<ScmcStage> log;
};

using ScmcCallback = std::function<void(const ScmcStage&, const ParticleEnsemble&)>;

/// beta_1 = first, ..., beta_T = last, geometric spacing.
std::vector<double> geometric_schedule(int stages, double first = 1.0, double last = 1e6);

/// SMC over exp(-beta_t * Slack) on the box, with reweighting, systematic
/// resampling and adaptive random-walk Metropolis moves per stage.
ScmcResult scmc_run(const ConstraintProblem& problem, int n, const std::vector<double>& schedule, std::uint64_t seed,
                    const ScmcConfig& cfg = {}, const ScmcCallback& on_stage = {});

}  // namespace masem
