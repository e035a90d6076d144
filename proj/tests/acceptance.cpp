// Acceptance checks, one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset.
#include "masem/experiment.hpp"
#include "masem/meanfield.hpp"

#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>
#include <set>
#include <sstream>

using namespace masem;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

struct Line {
  int id;
  bool pass;
  std::string detail;
};

void report(const Line& l) {
  std::cout << "criterion " << l.id << ": " << (l.pass ? "PASS" : "FAIL") << "  " << l.detail << std::endl;
}

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(4) << v;
  return os.str();
}

const std::vector<std::uint64_t> kSeeds{0, 1, 2, 3, 4};

// Desk-scale runs shared by criteria 3, 4 and 5.
std::map<std::string, metrics::MetricReport> g_runs;

const metrics::MetricReport& desk_run(const std::string& problem, const std::string& method, std::uint64_t seed,
                                      const std::vector<std::string>& metric_list) {
  const std::string key = problem + "|" + method + "|" + std::to_string(seed);
  auto it = g_runs.find(key);
  if (it != g_runs.end()) return it->second;
  RunConfig cfg;
  cfg.problem = problem;
  cfg.method = method;
  cfg.seed = seed;
  cfg.n_particles = 500;
  cfg.total_steps = 1000;
  cfg.metrics = metric_list;
  cfg.write_files = false;
  auto outcome = run_experiment(cfg);
  auto rep = outcome.reports.back();
  if (outcome.pre_projection_slack) rep.values["pre_projection_mean_max_slack"] = *outcome.pre_projection_slack;
  return g_runs.emplace(key, std::move(rep)).first->second;
}

Line criterion1() {
  const auto t0 = Clock::now();
  const auto rep = meanfield::verify_random_instances(1000, 0, 100);
  const double secs = seconds_since(t0);
  const bool pass = rep.instances == 1000 && rep.holds() && secs < 10.0;
  return {1, pass,
          "instances=" + std::to_string(rep.instances) + " violations=" + std::to_string(rep.violations) +
              " max_ratio=" + fmt(rep.max_ratio) + " closed_form_err=" + fmt(rep.max_closed_form_error) +
              " time=" + fmt(secs) + "s (bound holds, error<=1e-12, <10s)"};
}

Line criterion2() {
  const auto t0 = Clock::now();
  meanfield::ComponentLossConfig cfg;
  cfg.tau = 1.0;
  cfg.n_particles = 400;
  cfg.init = meanfield::InitMode::Uniform;
  cfg.iterations = 10;
  cfg.n_trials = 100;
  const auto res = meanfield::component_loss_sim(benchmarks::DiskGrid{}, cfg);
  const double secs = seconds_since(t0);
  const bool pass = res.mean_covered >= 99.5 && secs < 600.0;
  return {2, pass,
          "mean_covered=" + fmt(res.mean_covered) + " +- " + fmt(res.ci_half_width) +
              " min=" + std::to_string(res.min_covered) + " time=" + fmt(secs) + "s (>=99.5, <600s)"};
}

Line criterion3() {
  const auto t0 = Clock::now();
  std::vector<double> masem_w, nhr_w, masem_tv;
  for (auto seed : kSeeds) {
    const auto& m = desk_run("disks-disconnected", "masem-nhr", seed, {"slack", "sinkhorn", "tv"});
    const auto& n = desk_run("disks-disconnected", "nhr", seed, {"slack", "sinkhorn", "tv"});
    masem_w.push_back(m.values.at("sinkhorn_w22"));
    nhr_w.push_back(n.values.at("sinkhorn_w22"));
    masem_tv.push_back(m.values.at("tv_components"));
  }
  const double secs = seconds_since(t0);
  const double mm = median(masem_w);
  const double mn = median(nhr_w);
  const double tv_max = *std::max_element(masem_tv.begin(), masem_tv.end());
  const bool pass = mm <= 0.1 * mn && tv_max <= 0.05 && secs < 900.0;
  return {3, pass,
          "median W2 masem-nhr=" + fmt(mm) + " nhr=" + fmt(mn) + " ratio=" + fmt(mm / mn) +
              " max TV masem-nhr=" + fmt(tv_max) + " (target " + fmt(benchmarks::disk_cap_masses()[0]) + "/" +
              fmt(benchmarks::disk_cap_masses()[1]) + ") time=" + fmt(secs) + "s (ratio<=0.1, TV<=0.05 every seed, <900s)"};
}

Line criterion4() {
  const auto t0 = Clock::now();
  std::vector<double> masem_w, nhr_w;
  for (auto seed : kSeeds) {
    masem_w.push_back(desk_run("sine", "masem-nhr", seed, {"slack", "sinkhorn", "tv"}).values.at("sinkhorn_w22"));
    nhr_w.push_back(desk_run("sine", "nhr", seed, {"slack", "sinkhorn", "tv"}).values.at("sinkhorn_w22"));
  }
  const double secs = seconds_since(t0);
  const double mm = median(masem_w);
  const double mn = median(nhr_w);
  const bool pass = 10.0 * mm <= mn && secs < 900.0;
  return {4, pass,
          "median W2 masem-nhr=" + fmt(mm) + " nhr=" + fmt(mn) + " ratio=" + fmt(mn / mm) + "x time=" + fmt(secs) +
              "s (>=10x, <900s)"};
}

Line criterion5() {
  std::ostringstream os;
  bool pass = true;
  for (const std::string problem :
       {"disks-connected", "disks-disconnected", "seven-lobes", "sine", "swiss-roll", "stress:d=8,m=5"}) {
    const auto& rep = desk_run(problem, "masem-nhr", 0, {"slack", "sinkhorn", "tv"});
    const double s = rep.values.at("mean_max_slack");
    pass = pass && s <= 1e-2;
    os << problem << "=" << fmt(s) << " ";
  }
  const double masem_swiss = desk_run("swiss-roll", "masem-nhr", 0, {"slack", "sinkhorn", "tv"}).values.at("mean_max_slack");
  const double scmc_pre = desk_run("swiss-roll", "scmc", 0, {"slack"}).values.at("pre_projection_mean_max_slack");
  pass = pass && scmc_pre > masem_swiss;
  os << "| swiss-roll scmc pre-projection=" << fmt(scmc_pre) << " vs masem-nhr=" << fmt(masem_swiss)
     << " (all <=1e-2, scmc > masem)";
  return {5, pass, os.str()};
}

Line criterion6() {
  const auto t0 = Clock::now();
  metrics::DiscriminationConfig cfg;
  cfg.n_trials = 200;
  const auto res = metrics::discrimination_experiment(cfg);
  const double secs = seconds_since(t0);
  const auto& kl = res.find("pairwise_kl");
  const bool pass = kl.p_center < 0.01 && secs < 600.0;
  std::ostringstream os;
  os << "pairwise_kl p_center=" << fmt(kl.p_center) << " p_edge=" << fmt(kl.p_edge);
  for (const auto& m : res.metrics) {
    if (m.metric != "pairwise_kl") os << " | " << m.metric << " p_center=" << fmt(m.p_center) << " p_edge=" << fmt(m.p_edge);
  }
  os << " time=" << fmt(secs) << "s (KL p<0.01, <600s)";
  return {6, pass, os.str()};
}

Line criterion7() {
  const auto t0 = Clock::now();
  Rng rng = make_stream(0, "acceptance-estimators");
  Points X(2000, 2);
  for (Eigen::Index i = 0; i < X.rows(); ++i) X.row(i) << uniform01(rng), uniform01(rng);
  const double density = knn_density(knn_radii(X, 20), 20, 2).mean();
  const double entropy = metrics::kl_entropy(X, 4);
  const double secs = seconds_since(t0);
  const bool pass = std::abs(density - 1.0) <= 0.1 && std::abs(entropy) <= 0.15 && secs < 5.0;
  return {7, pass,
          "mean kNN density (k=20)=" + fmt(density) + " KL entropy (k=4)=" + fmt(entropy) + " time=" + fmt(secs) +
              "s (|density-1|<=0.1, |H|<=0.15, <5s)"};
}

Line criterion8() {
  std::ostringstream os;
  bool pass = true;
  double worst = 0.0;
  for (const std::string name :
       {"disks-connected", "disks-disconnected", "seven-lobes", "sine", "swiss-roll", "stress:d=8,m=5", "disk-grid"}) {
    const auto b = benchmarks::make_benchmark(name);
    Rng rng = make_stream(0, "acceptance-gt");
    const Points X = benchmarks::ground_truth(b.problem, 20000, rng);
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const Vector x = X.row(i).transpose();
      worst = std::max(worst, slack(x, b.problem).max_violation);
      if (!within_bounds(x, b.problem)) worst = std::max(worst, 1.0);
    }
  }
  pass = pass && worst <= 1e-9;
  os << "max GT violation=" << fmt(worst);

  {
    const auto b = benchmarks::make_disks(false);
    Rng rng = make_stream(0, "acceptance-disks");
    const Points X = benchmarks::ground_truth(b.problem, 100000, rng);
    int small = 0;
    for (Eigen::Index i = 0; i < X.rows(); ++i) small += b.problem.component_of(X.row(i).transpose()) == 0 ? 1 : 0;
    const double frac = small / 1e5;
    const double want = benchmarks::disk_cap_masses()[0];
    pass = pass && std::abs(frac - want) <= 0.01;
    os << " | disks small-cap fraction=" << fmt(frac) << " vs " << fmt(want);
  }

  {
    const auto b = benchmarks::make_seven_lobes();
    const int bins = 100;
    const int fine = 2000000;
    std::vector<double> mass(bins, 0.0);
    double total = 0.0;
    for (int i = 0; i < fine; ++i) {
      const double th = 2 * std::numbers::pi * (i + 0.5) / fine;
      if (evaluate_g(b.problem, benchmarks::seven_lobes_point(th))[0] > 0.0) continue;
      const double ds = benchmarks::seven_lobes_speed(th);
      mass[static_cast<std::size_t>(i / (fine / bins))] += ds;
      total += ds;
    }
    const auto occupied = std::count_if(mass.begin(), mass.end(), [](double v) { return v > 0.0; });
    const double crit = boost::math::quantile(boost::math::chi_squared(static_cast<double>(occupied - 1)), 0.99);
    int passed = 0;
    for (auto seed : kSeeds) {
      Rng rng = make_stream(seed, "acceptance-lobes");
      const Points X = benchmarks::ground_truth(b.problem, 100000, rng);
      std::vector<double> counts(bins, 0.0);
      for (Eigen::Index i = 0; i < X.rows(); ++i) {
        double th = std::atan2(X(i, 1), X(i, 0));
        if (th < 0) th += 2 * std::numbers::pi;
        counts[std::min<std::size_t>(bins - 1, static_cast<std::size_t>(th / (2 * std::numbers::pi) * bins))] += 1;
      }
      double chi2 = 0.0;
      for (std::size_t j = 0; j < static_cast<std::size_t>(bins); ++j) {
        if (mass[j] == 0.0) continue;
        const double e = 1e5 * mass[j] / total;
        chi2 += (counts[j] - e) * (counts[j] - e) / e;
      }
      passed += chi2 < crit ? 1 : 0;
    }
    pass = pass && passed >= 4;
    os << " | seven-lobes chi2 passes " << passed << "/5 (crit " << fmt(crit) << ")";
  }
  os << " (violation<=1e-9, split within 0.01, chi2 >=4/5)";
  return {8, pass, os.str()};
}

Line criterion9() {
  std::ostringstream os;
  bool pass = true;
  const fs::path root = fs::temp_directory_path() / "masem_acceptance_determinism";
  for (const std::string method : {"masem-nhr", "masem-olla", "nhr", "scmc", "cluster-nhr"}) {
    std::vector<std::string> texts;
    int idx = 0;
    for (const char* threads : {"1", "4", "4"}) {
      setenv("MASEM_THREADS", threads, 1);
      const fs::path out = root / (method + "_" + std::to_string(idx++));
      fs::remove_all(out);
      RunConfig cfg;
      cfg.problem = "sine";
      cfg.method = method;
      cfg.seed = 7;
      cfg.n_particles = 200;
      cfg.total_steps = 100;
      cfg.eval_every = 50;
      cfg.metrics = {"slack", "sinkhorn", "pairwise-kl", "tv", "feasible-entropy"};
      cfg.out_dir = out;
      const auto outcome = run_experiment(cfg);
      std::ifstream in(outcome.jsonl_path, std::ios::binary);
      std::stringstream ss;
      ss << in.rdbuf();
      texts.push_back(ss.str());
    }
    const bool same = !texts[0].empty() && texts[0] == texts[1] && texts[1] == texts[2];
    pass = pass && same;
    os << method << "=" << (same ? "identical" : "DIFFERENT") << " ";
  }
  unsetenv("MASEM_THREADS");
  fs::remove_all(root);
  os << "(JSONL byte-identical for MASEM_THREADS=1,4,4)";
  return {9, pass, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  auto want = [&](int id) { return wanted.empty() || wanted.count(id) > 0; };

  const std::vector<Line (*)()> checks{criterion1, criterion2, criterion3, criterion4, criterion5,
                                       criterion6, criterion7, criterion8, criterion9};
  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!want(id)) continue;
    Line line{id, false, ""};
    try {
      line = checks[i]();
    } catch (const std::exception& e) {
      line.detail = std::string("error: ") + e.what();
    }
    report(line);
    failures += line.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
