#include "masem/kernels.hpp"

#include "masem/parallel.hpp"
#include "masem/resampler.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace masem {

void KernelConfig::validate() const {
  if (!(nhr_max_step > 0.0)) throw ConfigError("nhr_max_step must be > 0");
  if (!(olla_step_size >= 0.0)) throw ConfigError("olla_step_size must be >= 0");
  if (!(olla_landing_gain > 0.0)) throw ConfigError("olla_landing_gain must be > 0");
  if (!(olla_barrier_weight >= 0.0)) throw ConfigError("olla_barrier_weight must be >= 0");
  if (hutchinson_probes < 0) throw ConfigError("hutchinson_probes must be >= 0");
  nhr_project.validate();
}

Vector nhr_transition(const Vector& x, const ConstraintProblem& problem, const KernelConfig& cfg, Rng& rng) {
  const Vector direction = random_unit_vector(rng, problem.dim);
  const double length = std::uniform_real_distribution<double>(-cfg.nhr_max_step, cfg.nhr_max_step)(rng);
  const Vector proposal = x + length * direction;
  if (!within_bounds(proposal, problem)) return x;

  ProjectionConfig pc = cfg.nhr_project;
  pc.noise_scale = 0.0;
  ProjectionResult projected = gauss_newton_project(proposal, problem, pc, rng);
  if (!projected.converged) return x;
  const Vector g = evaluate_g(problem, projected.x);
  if (g.size() > 0 && g.maxCoeff() > 1e-8) return x;
  return projected.x;
}

Matrix tangent_projector(const Matrix& jac_h, double damping) {
  const Eigen::Index d = jac_h.cols();
  Matrix P = Matrix::Identity(d, d);
  if (jac_h.rows() == 0) return P;
  Matrix gram = jac_h * jac_h.transpose();
  gram.diagonal().array() += damping;
  P -= jac_h.transpose() * gram.ldlt().solve(jac_h);
  return P;
}

namespace {

constexpr double kOllaDamping = 1e-8;

Matrix projector_at(const ConstraintProblem& problem, const Vector& x) {
  if (problem.num_eq == 0) return Matrix::Identity(problem.dim, problem.dim);
  return tangent_projector(jacobian_h(problem, x), kOllaDamping);
}

}  // namespace

Vector olla_transition(const Vector& x, const ConstraintProblem& problem, const KernelConfig& cfg, Rng& rng) {
  const Eigen::Index d = problem.dim;
  const double eta = cfg.olla_step_size;
  Vector step = Vector::Zero(d);
  Matrix P = Matrix::Identity(d, d);

  if (problem.num_eq > 0) {
    const Vector h = evaluate_h(problem, x);
    const Matrix Jh = jacobian_h(problem, x);
    Matrix gram = Jh * Jh.transpose();
    gram.diagonal().array() += kOllaDamping;
    const auto solver = gram.ldlt();
    const Vector landing = -Jh.transpose() * solver.solve(h);
    P -= Jh.transpose() * solver.solve(Jh);
    step += cfg.olla_landing_gain * landing;
  }

  if (eta > 0.0) {
    step += P * normal_vector(rng, d, std::sqrt(2.0 * eta));

    if (cfg.hutchinson_probes > 0 && problem.num_eq > 0) {
      // E_v[ D(P v) v ] is the divergence of the projector (mean-curvature drift).
      const double delta = 1e-5 * (1.0 + x.norm());
      Vector divergence = Vector::Zero(d);
      for (int probe = 0; probe < cfg.hutchinson_probes; ++probe) {
        Vector v(d);
        for (Eigen::Index j = 0; j < d; ++j) v[j] = uniform01(rng) < 0.5 ? -1.0 : 1.0;
        divergence += (projector_at(problem, x + delta * v) * v - projector_at(problem, x - delta * v) * v) / (2.0 * delta);
      }
      step += eta * divergence / static_cast<double>(cfg.hutchinson_probes);
    }
  }

  if (problem.num_ineq > 0 && cfg.olla_barrier_weight > 0.0) {
    const Vector g = evaluate_g(problem, x);
    if (g.maxCoeff() > 0.0) {
      const Vector g_plus = g.cwiseMax(0.0);
      step -= cfg.olla_barrier_weight * 2.0 * jacobian_g(problem, x).transpose() * g_plus;
    }
  }

  if (!step.allFinite()) throw NumericalError("OLLA step is not finite");
  return clamp_to_bounds(x + step, problem);
}

void kernel_step(ParticleEnsemble& ensemble, const ConstraintProblem& problem, const KernelConfig& cfg) {
  cfg.validate();
  const auto n = static_cast<std::size_t>(ensemble.size());
  if (ensemble.streams.size() != n) throw InputError("ensemble has mismatched RNG streams");
  ensemble.slack.resize(n);
  parallel_for(n, [&](std::size_t i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Vector x = ensemble.position(row);
    Vector next = cfg.kind == KernelKind::NHR ? nhr_transition(x, problem, cfg, ensemble.streams[i])
                                              : olla_transition(x, problem, cfg, ensemble.streams[i]);
    ensemble.slack[i] = slack(next, problem);
    ensemble.positions.row(row) = next.transpose();
  });
}

// --- SCMC ---------------------------------------------------------------

std::vector<double> geometric_schedule(int stages, double first, double last) {
  if (stages < 1) throw ConfigError("schedule needs at least one stage");
  if (!(first > 0.0 && last >= first)) throw ConfigError("geometric schedule needs 0 < first <= last");
  std::vector<double> betas(static_cast<std::size_t>(stages));
  if (stages == 1) {
    betas[0] = last;
    return betas;
  }
  const double ratio = std::log(last / first) / static_cast<double>(stages - 1);
  for (int t = 0; t < stages; ++t) betas[static_cast<std::size_t>(t)] = first * std::exp(ratio * t);
  betas.back() = last;
  return betas;
}

ScmcResult scmc_run(const ConstraintProblem& problem, int n, const std::vector<double>& schedule, std::uint64_t seed,
                    const ScmcConfig& cfg, const ScmcCallback& on_stage) {
  problem.validate();
  if (n < 1) throw InputError("SCMC needs at least one particle");
  if (schedule.empty()) throw ConfigError("SCMC schedule is empty");
  if (schedule.front() < 0.0) throw ConfigError("SCMC penalty strengths must be nonnegative");
  for (std::size_t t = 1; t < schedule.size(); ++t) {
    if (!(schedule[t] > schedule[t - 1])) throw ConfigError("SCMC schedule must be strictly increasing");
  }

  Points start(n, problem.dim);
  for (int i = 0; i < n; ++i) {
    Rng rng = make_stream(seed, "scmc-init", static_cast<std::uint64_t>(i));
    for (int j = 0; j < problem.dim; ++j) {
      start(i, j) = std::uniform_real_distribution<double>(problem.lo[j], problem.hi[j])(rng);
    }
  }
  ScmcResult result{make_ensemble(start, problem, seed), Points(), {}};
  ParticleEnsemble& ens = result.ensemble;
  Rng resample_rng = make_stream(seed, "resample");

  double scale = 0.1 * (problem.hi - problem.lo).mean();
  const double max_scale = (problem.hi - problem.lo).maxCoeff();
  double previous_beta = 0.0;
  std::vector<char> accepted(static_cast<std::size_t>(n));

  for (std::size_t t = 0; t < schedule.size(); ++t) {
    const double beta = schedule[t];
    Vector log_w(n);
    for (int i = 0; i < n; ++i) log_w[i] = -(beta - previous_beta) * ens.slack[static_cast<std::size_t>(i)].value;
    const double top = log_w.maxCoeff();
    if (!std::isfinite(top)) {
      throw NumericalError("SCMC weights degenerate at stage " + std::to_string(t + 1));
    }
    Vector w = (log_w.array() - top).exp();
    w /= w.sum();
    ScmcStage stage;
    stage.stage = static_cast<int>(t + 1);
    stage.beta = beta;
    stage.ess = 1.0 / w.squaredNorm();
    ens.select(systematic_resample(w, n, resample_rng));

    double acceptance_sum = 0.0;
    for (int move = 0; move < cfg.moves_per_stage; ++move) {
      parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        const auto row = static_cast<Eigen::Index>(i);
        Rng& rng = ens.streams[i];
        const Vector x = ens.position(row);
        const Vector y = x + normal_vector(rng, problem.dim, scale);
        accepted[i] = 0;
        if (!within_bounds(y, problem)) {
          uniform01(rng);
          return;
        }
        const SlackValue sy = slack(y, problem);
        const double log_ratio = -beta * (sy.value - ens.slack[i].value);
        if (std::log(uniform01(rng)) < log_ratio) {
          ens.positions.row(row) = y.transpose();
          ens.slack[i] = sy;
          accepted[i] = 1;
        }
      });
      double rate = 0.0;
      for (char a : accepted) rate += a;
      rate /= static_cast<double>(n);
      acceptance_sum += rate;
      scale = std::clamp(scale * std::exp(2.0 * (rate - cfg.target_acceptance)), 1e-12, max_scale);
    }
    stage.acceptance = cfg.moves_per_stage > 0 ? acceptance_sum / cfg.moves_per_stage : 0.0;
    stage.proposal_scale = scale;
    stage.mean_max_violation = mean_max_violation(ens);
    result.log.push_back(stage);
    ++ens.iteration;
    if (on_stage) on_stage(stage, ens);
    previous_beta = beta;
  }

  result.pre_projection = ens.positions;
  if (cfg.project_at_end) {
    ProjectionConfig pc = cfg.final_projection;
    pc.noise_scale = 0.0;
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
      const auto row = static_cast<Eigen::Index>(i);
      const Vector x = gauss_newton_project(ens.position(row), problem, pc, ens.streams[i]).x;
      ens.positions.row(row) = x.transpose();
      ens.slack[i] = slack(x, problem);
    });
  }
  return result;
}

}  // namespace masem
