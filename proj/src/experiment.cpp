#include "masem/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace masem {

namespace {

namespace fs = std::filesystem;

std::string family_of(const std::string& problem) {
  if (problem.starts_with("stress:")) return "stress";
  return problem;
}

bool is_stress_m5(const std::string& problem) {
  if (!problem.starts_with("stress:")) return false;
  const auto d_pos = problem.find("d=");
  const auto m_pos = problem.find("m=");
  if (d_pos == std::string::npos || m_pos == std::string::npos) return false;
  const int d = std::atoi(problem.c_str() + d_pos + 2);
  const int m = std::atoi(problem.c_str() + m_pos + 2);
  return m == 5 && m != d - 3;
}

std::string file_key(const std::string& s) {
  std::string out = s;
  for (char& c : out) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-') c = '_';
  }
  return out;
}

void write_atomically(const fs::path& target, const std::string& content) {
  fs::create_directories(target.parent_path().empty() ? fs::path(".") : target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw RunError("cannot write " + tmp.string());
    out << content;
  }
  fs::rename(tmp, target);
}

struct Stage {
  std::string module = "init";
  int iteration = 0;
};

}  // namespace

Hyperparameters default_hyperparameters(const std::string& problem, KernelKind kernel) {
  const bool nhr = kernel == KernelKind::NHR;
  const std::string fam = family_of(problem);
  if (fam == "disks-connected" || fam == "disks-disconnected") return {1.0, 50, 4};
  if (fam == "seven-lobes") return nhr ? Hyperparameters{0.81, 5, 8} : Hyperparameters{0.67, 5, 8};
  if (fam == "sine") return nhr ? Hyperparameters{0.75, 5, 16} : Hyperparameters{0.98, 10, 16};
  if (fam == "swiss-roll") return nhr ? Hyperparameters{0.65, 5, 16} : Hyperparameters{0.5, 50, 8};
  if (fam == "stress") {
    if (is_stress_m5(problem) && nhr) return {0.74, 20, 20};
    return {0.3, 5, 16};
  }
  if (fam == "mp-grid") return {0.65, 50, 8};
  if (fam == "mp-random") return nhr ? Hyperparameters{1.0, 50, 8} : Hyperparameters{0.935, 50, 4};
  if (fam == "grasping") return nhr ? Hyperparameters{0.41, 5, 19} : Hyperparameters{0.94, 10, 16};
  return {1.0, 10, 3};
}

KernelConfig default_kernel(const std::string& problem, KernelKind kernel) {
  KernelConfig k;
  k.kind = kernel;
  const std::string fam = family_of(problem);
  struct Steps {
    double nhr;
    double olla;
  };
  Steps s{1.0, 1e-2};
  // Larger NHR steps let the min-over-disks projection pull particles from the big cap into the small one.
  if (fam == "disks-connected" || fam == "disks-disconnected") s = {0.4, 1e-2};
  if (fam == "sine") s = {2.0, 5e-2};
  if (fam == "stress") s = {0.25, 1e-3};
  if (fam == "mp-grid" || fam == "mp-random") s = {0.5, 1e-3};
  if (fam == "grasping") s = {0.2, 1e-4};
  k.nhr_max_step = s.nhr;
  k.olla_step_size = s.olla;
  k.olla_barrier_weight = 0.5;
  return k;
}

std::vector<std::string> method_names() { return {"nhr", "olla", "masem-nhr", "masem-olla", "scmc", "cluster-nhr"}; }

std::vector<std::string> summary_columns() {
  return {"schema_version", "problem",         "method",       "seed",          "n",
          "steps",          "iteration",       "kernel_steps", "sinkhorn_w22",  "pairwise_kl",
          "feasible_entropy", "tv_components", "homotopy_entropy", "mean_max_slack"};
}

Points cached_ground_truth(const ConstraintProblem& problem, std::uint64_t seed, int n, const fs::path& dir) {
  if (n < 1) throw InputError("ground-truth size must be >= 1");
  fs::path file;
  if (!dir.empty()) {
    file = dir / ("gt_" + file_key(problem.name) + "_s" + std::to_string(seed) + "_n" + std::to_string(n) + ".txt");
    std::ifstream in(file);
    if (in) {
      Points pts(n, problem.dim);
      bool ok = true;
      for (int i = 0; i < n && ok; ++i) {
        for (int j = 0; j < problem.dim && ok; ++j) ok = static_cast<bool>(in >> pts(i, j));
      }
      if (ok) return pts;
    }
  }
  Rng rng = make_stream(seed, "gt");
  const Points pts = benchmarks::ground_truth(problem, static_cast<std::size_t>(n), rng);
  if (!file.empty()) {
    std::ostringstream os;
    os << std::setprecision(17);
    for (Eigen::Index i = 0; i < pts.rows(); ++i) {
      for (Eigen::Index j = 0; j < pts.cols(); ++j) os << (j ? " " : "") << pts(i, j);
      os << '\n';
    }
    write_atomically(file, os.str());
  }
  return pts;
}

RunOutcome run_experiment(const RunConfig& cfg, std::ostream* progress) {
  const auto methods = method_names();
  if (std::find(methods.begin(), methods.end(), cfg.method) == methods.end()) {
    throw InputError("unknown method '" + cfg.method + "'");
  }
  const benchmarks::Benchmark bench = benchmarks::make_benchmark(cfg.problem);
  const ConstraintProblem& problem = bench.problem;
  if (cfg.n_particles < 2) throw ConfigError("--n must be >= 2");
  if (cfg.total_steps < 1) throw ConfigError("--steps must be >= 1");
  if (cfg.eval_every < 0) throw ConfigError("--eval-every must be >= 0");
  for (const auto& m : cfg.metrics) {
    const auto known = metrics::metric_names();
    if (std::find(known.begin(), known.end(), m) == known.end()) throw InputError("unknown metric '" + m + "'");
  }

  const bool wants_gt = std::any_of(cfg.metrics.begin(), cfg.metrics.end(),
                                    [](const std::string& m) { return m == "sinkhorn" || m == "pairwise-kl"; });
  std::optional<Points> gt;
  if (wants_gt && problem.ground_truth) {
    gt = cached_ground_truth(problem, cfg.seed, cfg.n_particles, cfg.write_files ? cfg.out_dir : fs::path{});
  }

  RunOutcome outcome;
  Stage stage;
  auto evaluate = [&](const ParticleEnsemble& ens, int iteration, int kernel_steps) {
    stage.module = "metrics";
    metrics::EvaluationContext ctx{&problem, gt ? &*gt : nullptr, bench.planning.get(), cfg.seed};
    metrics::MetricReport rep;
    rep.problem = problem.name;
    rep.method = cfg.method;
    rep.seed = cfg.seed;
    rep.n = cfg.n_particles;
    rep.iteration = iteration;
    rep.kernel_steps = kernel_steps;
    rep.values = metrics::evaluate(ens.positions, cfg.metrics, ctx);
    if (progress) *progress << rep.to_json() << '\n';
    outcome.reports.push_back(std::move(rep));
  };
  auto due = [&](int iteration) { return cfg.eval_every > 0 && iteration % cfg.eval_every == 0; };

  const bool olla = cfg.method == "olla" || cfg.method == "masem-olla";
  const KernelKind kind = olla ? KernelKind::OLLA : KernelKind::NHR;
  const Hyperparameters hp = default_hyperparameters(problem.name, kind);

  MasemConfig mc;
  mc.n_particles = cfg.n_particles;
  mc.kernel = default_kernel(problem.name, kind);
  mc.temperature = cfg.tau.value_or(hp.tau);
  mc.k_max = cfg.k.value_or(hp.k);
  mc.rejuvenation_steps = cfg.m_steps.value_or(hp.m_steps);
  mc.penalty = cfg.mu;
  mc.seed = cfg.seed;
  // Initialization consumes one batch of M steps, so T + 1 batches fill the budget.
  mc.n_iterations = std::max(0, cfg.total_steps / mc.rejuvenation_steps - 1);

  try {
    if (cfg.method == "nhr" || cfg.method == "olla") {
      mc.validate();
      ParticleEnsemble ens = initialize_ensemble(problem, cfg.n_particles, cfg.seed, mc.projection);
      for (int s = 1; s <= cfg.total_steps; ++s) {
        stage = {"kernels", s};
        kernel_step(ens, problem, mc.kernel);
        ens.iteration = s;
        if (due(s) && s != cfg.total_steps) evaluate(ens, s, s);
      }
      evaluate(ens, cfg.total_steps, cfg.total_steps);
      outcome.positions = ens.positions;
    } else if (cfg.method == "masem-nhr" || cfg.method == "masem-olla" || cfg.method == "cluster-nhr") {
      const int last = mc.n_iterations;
      auto cb = [&](const IterationRecord& rec, const ParticleEnsemble& ens) {
        if (rec.iteration == last || due(rec.iteration)) evaluate(ens, rec.iteration, rec.kernel_steps);
        stage = {"resampler", rec.iteration + 1};
      };
      stage = {"resampler", 0};
      MasemResult res;
      if (cfg.method == "cluster-nhr") {
        ClusterConfig cc;
        cc.linkage_radius = 2.0 * mc.kernel.nhr_max_step;
        cc.volume_k = mc.k_max;
        res = cluster_nhr_run(problem, mc, cc, cb);
      } else {
        res = masem_run(problem, mc, cb);
      }
      outcome.positions = res.ensemble.positions;
    } else {  // scmc
      ScmcConfig sc;
      const int stages = std::max(1, cfg.total_steps / sc.moves_per_stage);
      auto cb = [&](const ScmcStage& st, const ParticleEnsemble& ens) {
        stage = {"scmc", st.stage};
        if (due(st.stage) && st.stage != stages) evaluate(ens, st.stage, st.stage * sc.moves_per_stage);
      };
      ScmcResult res = scmc_run(problem, cfg.n_particles, geometric_schedule(stages), cfg.seed, sc, cb);
      ParticleEnsemble pre = make_ensemble(res.pre_projection, problem, cfg.seed);
      outcome.pre_projection_slack = mean_max_violation(pre);
      evaluate(res.ensemble, stages, stages * sc.moves_per_stage);
      outcome.reports.back().values["pre_projection_mean_max_slack"] = *outcome.pre_projection_slack;
      outcome.positions = res.ensemble.positions;
    }
  } catch (const NumericalError& e) {
    throw RunError(std::string("numerical failure in ") + stage.module + " at iteration " +
                   std::to_string(stage.iteration) + ": " + e.what());
  } catch (const EvaluationError& e) {
    throw RunError(std::string("constraint evaluation failed in ") + stage.module + " at iteration " +
                   std::to_string(stage.iteration) + ": " + e.what());
  }

  if (cfg.write_files) {
    std::ostringstream lines;
    for (const auto& r : outcome.reports) lines << r.to_json() << '\n';
    const std::string stem = file_key(problem.name) + "_" + cfg.method + "_s" + std::to_string(cfg.seed);
    outcome.jsonl_path = cfg.out_dir / (stem + ".jsonl");
    write_atomically(outcome.jsonl_path, lines.str());

    outcome.csv_path = cfg.out_dir / "summary.csv";
    const bool fresh = !fs::exists(outcome.csv_path);
    std::ofstream csv(outcome.csv_path, std::ios::app);
    if (!csv) throw RunError("cannot write " + outcome.csv_path.string());
    const auto cols = summary_columns();
    if (fresh) {
      for (std::size_t i = 0; i < cols.size(); ++i) csv << (i ? "," : "") << cols[i];
      csv << '\n';
    }
    const auto& fin = outcome.reports.back();
    csv << std::setprecision(17) << 1 << ',' << '"' << fin.problem << '"' << ',' << fin.method << ',' << fin.seed
        << ',' << fin.n << ',' << cfg.total_steps << ',' << fin.iteration << ',' << fin.kernel_steps;
    for (std::size_t i = 8; i < cols.size(); ++i) {
      csv << ',';
      const auto it = fin.values.find(cols[i]);
      if (it != fin.values.end()) csv << it->second;
    }
    csv << '\n';
  }
  return outcome;
}

}  // namespace masem
