#include "masem/experiment.hpp"
#include "masem/meanfield.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path);
  if (!out) throw masem::RunError("cannot write " + path);
  out << content;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained sampling with entropy-weighted resampling"};
  app.require_subcommand(1);

  masem::RunConfig run;
  std::string metrics_list = "slack,sinkhorn,pairwise-kl,tv,feasible-entropy,homotopy-entropy";
  std::string out_dir = "results";
  auto* run_cmd = app.add_subcommand("run", "Run one sampler on one problem");
  run_cmd->add_option("--problem", run.problem, "Problem name (see `list`)")->required();
  run_cmd->add_option("--method", run.method, "nhr, olla, masem-nhr, masem-olla, scmc, cluster-nhr")->required();
  run_cmd->add_option("--seed", run.seed, "Master seed");
  run_cmd->add_option("--n", run.n_particles, "Number of particles");
  run_cmd->add_option("--steps", run.total_steps, "Kernel applications per particle");
  run_cmd->add_option("--tau", run.tau, "Weight temperature");
  run_cmd->add_option("--k", run.k, "Neighbours averaged in the weights");
  run_cmd->add_option("--m-steps", run.m_steps, "Kernel steps between resampling rounds");
  run_cmd->add_option("--mu", run.mu, "Slack penalty");
  run_cmd->add_option("--metrics", metrics_list, "Comma-separated metric names");
  run_cmd->add_option("--eval-every", run.eval_every, "Evaluation period in method iterations (0 = final only)");
  run_cmd->add_option("--out", out_dir, "Output directory");

  auto* list_cmd = app.add_subcommand("list", "List problems, methods and metrics");

  std::string gt_problem;
  int gt_n = 1000;
  std::uint64_t gt_seed = 0;
  std::string gt_out;
  auto* gt_cmd = app.add_subcommand("ground-truth", "Draw exact uniform samples");
  gt_cmd->add_option("--problem", gt_problem)->required();
  gt_cmd->add_option("--n", gt_n);
  gt_cmd->add_option("--seed", gt_seed);
  gt_cmd->add_option("--out", gt_out, "CSV file (stdout if omitted)");

  int mf_instances = 1000;
  int mf_tmax = 100;
  std::uint64_t mf_seed = 0;
  auto* mf_cmd = app.add_subcommand("meanfield-verify", "Check the KL bound on random instances");
  mf_cmd->add_option("--instances", mf_instances);
  mf_cmd->add_option("--t-max", mf_tmax);
  mf_cmd->add_option("--seed", mf_seed);

  std::string cl_tau = "0.1,0.5,1.0,1.5";
  std::string cl_n = "400";
  std::string cl_init = "uniform,worst-case";
  int cl_trials = 100;
  int cl_iters = 10;
  int cl_k = 8;
  std::uint64_t cl_seed = 0;
  std::string cl_out;
  auto* cl_cmd = app.add_subcommand("component-loss", "Covered components on the 10x10 disk grid");
  cl_cmd->add_option("--tau", cl_tau, "Comma-separated temperatures");
  cl_cmd->add_option("--n", cl_n, "Comma-separated particle counts");
  cl_cmd->add_option("--init", cl_init, "uniform and/or worst-case");
  cl_cmd->add_option("--trials", cl_trials);
  cl_cmd->add_option("--steps", cl_iters, "Resampling iterations T");
  cl_cmd->add_option("--k", cl_k, "Neighbours averaged in the weights");
  cl_cmd->add_option("--seed", cl_seed);
  cl_cmd->add_option("--out", cl_out, "CSV file (stdout if omitted)");

  masem::metrics::DiscriminationConfig dc;
  std::string dc_out;
  auto* dc_cmd = app.add_subcommand("discrimination", "Metric sensitivity on biased disk samples");
  dc_cmd->add_option("--trials", dc.n_trials);
  dc_cmd->add_option("--seed", dc.seed);
  dc_cmd->add_option("--out", dc_out, "CSV file (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*run_cmd) {
      run.metrics = split_list(metrics_list);
      run.out_dir = out_dir;
      const auto outcome = masem::run_experiment(run);
      std::cout << outcome.reports.back().to_json() << '\n';
      std::cerr << "wrote " << outcome.jsonl_path.string() << " and " << outcome.csv_path.string() << '\n';
    } else if (*list_cmd) {
      std::cout << "problems:\n";
      for (const auto& p : masem::benchmarks::problem_names()) std::cout << "  " << p << '\n';
      std::cout << "methods:\n";
      for (const auto& m : masem::method_names()) std::cout << "  " << m << '\n';
      std::cout << "metrics:\n";
      for (const auto& m : masem::metrics::metric_names()) std::cout << "  " << m << '\n';
    } else if (*gt_cmd) {
      const auto bench = masem::benchmarks::make_benchmark(gt_problem);
      masem::Rng rng = masem::make_stream(gt_seed, "gt");
      const masem::Points pts = masem::benchmarks::ground_truth(bench.problem, static_cast<std::size_t>(gt_n), rng);
      std::ostringstream os;
      os << std::setprecision(17);
      for (int j = 0; j < pts.cols(); ++j) os << (j ? "," : "") << 'x' << j;
      os << '\n';
      for (Eigen::Index i = 0; i < pts.rows(); ++i) {
        for (Eigen::Index j = 0; j < pts.cols(); ++j) os << (j ? "," : "") << pts(i, j);
        os << '\n';
      }
      emit(gt_out, os.str());
    } else if (*mf_cmd) {
      const auto rep = masem::meanfield::verify_random_instances(mf_instances, mf_seed, mf_tmax);
      nlohmann::ordered_json j;
      j["schema_version"] = 1;
      j["instances"] = rep.instances;
      j["violations"] = rep.violations;
      j["max_ratio"] = rep.max_ratio;
      j["max_closed_form_error"] = rep.max_closed_form_error;
      j["kl_monotone"] = rep.kl_monotone;
      j["holds"] = rep.holds();
      std::cout << j.dump() << '\n';
      return rep.holds() ? 0 : 1;
    } else if (*cl_cmd) {
      std::ostringstream os;
      os << "schema_version,tau,n,init,mean_covered,ci_half_width,min_covered\n";
      for (const auto& init_name : split_list(cl_init)) {
        masem::meanfield::InitMode mode;
        if (init_name == "uniform") {
          mode = masem::meanfield::InitMode::Uniform;
        } else if (init_name == "worst-case") {
          mode = masem::meanfield::InitMode::WorstCase;
        } else {
          throw masem::InputError("unknown init mode '" + init_name + "'");
        }
        for (const auto& n_text : split_list(cl_n)) {
          for (const auto& tau_text : split_list(cl_tau)) {
            masem::meanfield::ComponentLossConfig cfg;
            cfg.tau = std::stod(tau_text);
            cfg.n_particles = std::stoi(n_text);
            cfg.init = mode;
            cfg.n_trials = cl_trials;
            cfg.iterations = cl_iters;
            cfg.k = cl_k;
            cfg.seed = cl_seed;
            const auto res = masem::meanfield::component_loss_sim(masem::benchmarks::DiskGrid{}, cfg);
            os << 1 << ',' << cfg.tau << ',' << cfg.n_particles << ',' << init_name << ',' << res.mean_covered << ','
               << res.ci_half_width << ',' << res.min_covered << '\n';
          }
        }
      }
      emit(cl_out, os.str());
    } else if (*dc_cmd) {
      const auto res = masem::metrics::discrimination_experiment(dc);
      std::ostringstream os;
      os << std::setprecision(6);
      os << "schema_version,metric,mean_reference,mean_center,mean_edge,p_center,p_edge,self_p\n";
      for (const auto& m : res.metrics) {
        os << 1 << ',' << m.metric << ',' << m.mean_reference << ',' << m.mean_center << ',' << m.mean_edge << ','
           << m.p_center << ',' << m.p_edge << ',' << m.self_check.p_value << '\n';
      }
      emit(dc_out, os.str());
    }
  } catch (const masem::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const masem::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
