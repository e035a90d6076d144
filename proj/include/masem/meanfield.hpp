#pragma once

#include "masem/benchmarks.hpp"

#include <cstdint>
#include <vector>

namespace masem::meanfield {

/// Throws InputError unless `alpha` lies on the simplex (to 1e-12) with
/// nonnegative entries; `strictly_positive` additionally rejects zeros.
void check_simplex(const Vector& alpha, bool strictly_positive);

/// Geometric interpolation alpha^(1-beta) * alpha_star^beta, normalized.
Vector phi_map(const Vector& alpha, const Vector& alpha_star, double beta);

/// alpha_t = alpha_star * exp(a_t z) / Z(a_t) with a_t = (1 - beta)^t.
struct TiltedFamily {
  Vector alpha_star;
  Vector z;  ///< log(alpha0 / alpha_star)
  double beta = 0.5;

  static TiltedFamily from_initial(const Vector& alpha0, const Vector& alpha_star, double beta);
};

Vector closed_form(const TiltedFamily& family, int t);

/// sum alpha log(alpha / alpha_star) with 0 log 0 = 0.
double kl_simplex(const Vector& alpha, const Vector& alpha_star);

/// (max_c z_c - min_c z_c)^2 / 4.
double c0_constant(const Vector& alpha0, const Vector& alpha_star);

struct BoundReport {
  bool holds = true;
  double max_ratio = 0.0;  ///< max_t KL_t / bound_t over t with bound_t > 1e-12
  int violations = 0;
};

/// Checks KL(alpha_t, alpha_star) <= C0 (1-beta)^{2t} + 1e-12 for t = 0..t_max
/// along the exact iterates of phi_map.
BoundReport verify_theorem_bound(const TiltedFamily& family, int t_max);

/// Smallest t with C0 (1-beta)^{2t} <= eps.
int iterations_to_eps(double c0, double beta, double eps);

struct Extinction {
  Vector probability;  ///< (1 - (phi alpha)_c)^N
  Vector bound;        ///< exp(-N (phi alpha)_c)
};

Extinction extinction_probability(const Vector& alpha, const Vector& alpha_star, double beta, int n);

/// Summary of the randomized property check over many tilted families.
struct SuiteReport {
  int instances = 0;
  int violations = 0;
  double max_ratio = 0.0;
  double max_closed_form_error = 0.0;
  bool kl_monotone = true;
  bool holds() const { return violations == 0 && max_closed_form_error <= 1e-12 && kl_monotone; }
};

/// Random instances with C uniform in {2..max_components}, beta in
/// {0.1, ..., 0.9}, alpha0 and alpha_star drawn from flat Dirichlets.
SuiteReport verify_random_instances(int instances, std::uint64_t seed, int t_max = 100, int max_components = 50,
                                    int closed_form_horizon = 200);

// --- Finite-N component loss --------------------------------------------

enum class InitMode { Uniform, WorstCase };

struct ComponentLossConfig {
  int n_particles = 400;
  double tau = 1.0;
  int iterations = 10;
  int n_trials = 100;
  InitMode init = InitMode::Uniform;
  int k = 8;  ///< above the per-component occupancy so radii reach other disks
  int rejuvenation_steps = 10;
  double penalty = 1000.0;
  std::uint64_t seed = 0;
};

struct ComponentLossResult {
  double mean_covered = 0.0;
  double ci_half_width = 0.0;  ///< 95% normal-approximation interval
  int min_covered = 0;
  std::vector<int> covered_per_trial;
  std::vector<int> initially_covered;
};

/// Places particles uniformly inside the disks of a disk grid,
/// runs resampling with a step-capped hit-and-run kernel and counts
/// components that still hold a particle.
ComponentLossResult component_loss_sim(const benchmarks::DiskGrid& grid, const ComponentLossConfig& cfg);

}  // namespace masem::meanfield
