#include "masem/experiment.hpp"
#include "masem/meanfield.hpp"

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace masem;

namespace {

struct PyProblem {
  benchmarks::Benchmark bench;

  const ConstraintProblem& get() const { return bench.problem; }
};

PyProblem problem_by_name(const std::string& name) { return {benchmarks::make_benchmark(name)}; }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Constrained sampling with entropy-weighted resampling";

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<UnsupportedError>(m, "UnsupportedError", PyExc_NotImplementedError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<RunError>(m, "RunError", PyExc_RuntimeError);

  py::class_<PyProblem>(m, "Problem")
      .def(py::init(&problem_by_name), py::arg("name"))
      .def_property_readonly("name", [](const PyProblem& p) { return p.get().name; })
      .def_property_readonly("dim", [](const PyProblem& p) { return p.get().dim; })
      .def_property_readonly("num_eq", [](const PyProblem& p) { return p.get().num_eq; })
      .def_property_readonly("num_ineq", [](const PyProblem& p) { return p.get().num_ineq; })
      .def_property_readonly("lo", [](const PyProblem& p) { return p.get().lo; })
      .def_property_readonly("hi", [](const PyProblem& p) { return p.get().hi; })
      .def_property_readonly("intrinsic_dim", [](const PyProblem& p) { return p.get().intrinsic_dim_hint; })
      .def_property_readonly("component_masses", [](const PyProblem& p) { return p.get().component_masses; })
      .def_property_readonly("has_ground_truth", [](const PyProblem& p) { return p.get().ground_truth != nullptr; })
      .def("h", [](const PyProblem& p, const Vector& x) { return evaluate_h(p.get(), x); }, py::arg("x"))
      .def("g", [](const PyProblem& p, const Vector& x) { return evaluate_g(p.get(), x); }, py::arg("x"))
      .def(
          "slack",
          [](const PyProblem& p, const Vector& x) {
            const auto s = slack(x, p.get());
            return py::make_tuple(s.value, s.max_violation);
          },
          py::arg("x"), "(value, max_violation)")
      .def(
          "is_feasible", [](const PyProblem& p, const Vector& x, double tol) { return is_feasible(x, p.get(), tol); },
          py::arg("x"), py::arg("tol") = 1e-9)
      .def(
          "component_of",
          [](const PyProblem& p, const Vector& x) { return p.get().component_of ? p.get().component_of(x) : -1; },
          py::arg("x"))
      .def(
          "ground_truth",
          [](const PyProblem& p, int n, std::uint64_t seed) {
            Rng rng = make_stream(seed, "gt");
            return benchmarks::ground_truth(p.get(), static_cast<std::size_t>(n), rng);
          },
          py::arg("n"), py::arg("seed") = 0)
      .def("__repr__", [](const PyProblem& p) { return "<Problem " + p.get().name + ">"; });

  m.def("problem_names", &benchmarks::problem_names);
  m.def("method_names", &method_names);
  m.def("metric_names", &metrics::metric_names);

  m.def(
      "project",
      [](const PyProblem& p, const Vector& x0, double noise, std::uint64_t seed) {
        ProjectionConfig cfg;
        cfg.noise_scale = noise;
        Rng rng = make_stream(seed, "project");
        const auto res = gauss_newton_project(x0, p.get(), cfg, rng);
        return py::make_tuple(res.x, res.converged, res.steps_used);
      },
      py::arg("problem"), py::arg("x0"), py::arg("noise") = 0.0, py::arg("seed") = 0,
      "Gauss-Newton projection; returns (x, converged, steps_used)");

  m.def(
      "initialize",
      [](const PyProblem& p, int n, std::uint64_t seed) { return initialize_ensemble(p.get(), n, seed).positions; },
      py::arg("problem"), py::arg("n"), py::arg("seed") = 0);

  m.def(
      "sample",
      [](const PyProblem& p, int n, int iterations, int m_steps, int k, double tau, double mu, const std::string& kernel,
         std::optional<double> step, std::uint64_t seed) {
        if (kernel != "nhr" && kernel != "olla") throw InputError("kernel must be 'nhr' or 'olla'");
        const KernelKind kind = kernel == "nhr" ? KernelKind::NHR : KernelKind::OLLA;
        MasemConfig cfg;
        cfg.n_particles = n;
        cfg.n_iterations = iterations;
        cfg.rejuvenation_steps = m_steps;
        cfg.k_max = k;
        cfg.temperature = tau;
        cfg.penalty = mu;
        cfg.kernel = default_kernel(p.get().name, kind);
        if (step) (kind == KernelKind::NHR ? cfg.kernel.nhr_max_step : cfg.kernel.olla_step_size) = *step;
        cfg.seed = seed;
        Points out;
        {
          py::gil_scoped_release release;
          out = masem_run(p.get(), cfg).ensemble.positions;
        }
        return out;
      },
      py::arg("problem"), py::arg("n") = 500, py::arg("iterations") = 10, py::arg("m_steps") = 50, py::arg("k") = 4,
      py::arg("tau") = 1.0, py::arg("mu") = 1000.0, py::arg("kernel") = "nhr", py::arg("step") = py::none(),
      py::arg("seed") = 0, "Entropy-weighted resampling; returns the final n x d positions");

  m.def(
      "run",
      [](const std::string& problem, const std::string& method, std::uint64_t seed, int n, int steps,
         std::vector<std::string> metric_list, int eval_every, std::optional<std::string> out_dir) {
        RunConfig cfg;
        cfg.problem = problem;
        cfg.method = method;
        cfg.seed = seed;
        cfg.n_particles = n;
        cfg.total_steps = steps;
        cfg.metrics = std::move(metric_list);
        cfg.eval_every = eval_every;
        cfg.write_files = out_dir.has_value();
        if (out_dir) cfg.out_dir = *out_dir;
        RunOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_experiment(cfg);
        }
        py::list reports;
        for (const auto& r : outcome.reports) {
          py::dict d;
          d["iteration"] = r.iteration;
          d["kernel_steps"] = r.kernel_steps;
          d["metrics"] = r.values;
          reports.append(d);
        }
        return py::make_tuple(outcome.positions, reports);
      },
      py::arg("problem"), py::arg("method"), py::arg("seed") = 0, py::arg("n") = 500, py::arg("steps") = 1000,
      py::arg("metrics") = std::vector<std::string>{"slack", "tv"}, py::arg("eval_every") = 0,
      py::arg("out_dir") = py::none(), "Runs one experiment; returns (positions, reports)");

  m.def(
      "knn_radii", [](const Points& X, int k) { return knn_radii(X, k).eps; }, py::arg("points"), py::arg("k"));
  m.def(
      "knn_density", [](const Points& X, int k, int p) { return knn_density(knn_radii(X, k), k, p); },
      py::arg("points"), py::arg("k"), py::arg("p"));
  m.def(
      "entropy_weights",
      [](const Points& X, int k, double tau) {
        return entropy_weights(knn_radii(X, k), std::vector<SlackValue>(static_cast<std::size_t>(X.rows())), tau, 0.0);
      },
      py::arg("points"), py::arg("k"), py::arg("tau"), "Weights of feasible particles");
  m.def(
      "systematic_resample",
      [](const Vector& w, int n_out, std::uint64_t seed) {
        Rng rng = make_stream(seed, "resample");
        return systematic_resample(w, n_out, rng);
      },
      py::arg("weights"), py::arg("n_out"), py::arg("seed") = 0);

  m.def(
      "sinkhorn_w22",
      [](const Points& X, const Points& Y, std::optional<double> reg, int max_iters, double tol) {
        metrics::SinkhornResult r;
        {
          py::gil_scoped_release release;
          r = reg ? metrics::sinkhorn_w22(X, Y, *reg, max_iters, tol) : metrics::sinkhorn_w22(X, Y);
        }
        return py::make_tuple(r.cost, r.converged);
      },
      py::arg("x"), py::arg("y"), py::arg("reg") = py::none(), py::arg("max_iters") = 5000, py::arg("tol") = 1e-8,
      "Returns (cost, converged)");
  m.def("pairwise_kl", &metrics::pairwise_kl, py::arg("x_gt"), py::arg("x"), py::arg("clip"), py::arg("bins") = 50);
  m.def("kl_entropy", &metrics::kl_entropy, py::arg("points"), py::arg("k"));
  m.def("energy_distance", &metrics::energy_distance, py::arg("x"), py::arg("y"));
  m.def(
      "tv_components", [](const PyProblem& p, const Points& X, double tol) { return metrics::tv_components(X, p.get(), tol); },
      py::arg("problem"), py::arg("points"), py::arg("tol") = 1e-5);
  m.def(
      "mean_max_slack", [](const PyProblem& p, const Points& X) { return metrics::mean_max_slack(X, p.get()); },
      py::arg("problem"), py::arg("points"));

  m.def("phi_map", &meanfield::phi_map, py::arg("alpha"), py::arg("alpha_star"), py::arg("beta"));
  m.def("kl_simplex", &meanfield::kl_simplex, py::arg("alpha"), py::arg("alpha_star"));
  m.def("c0_constant", &meanfield::c0_constant, py::arg("alpha0"), py::arg("alpha_star"));
  m.def(
      "verify_meanfield",
      [](int instances, std::uint64_t seed, int t_max) {
        const auto r = meanfield::verify_random_instances(instances, seed, t_max);
        py::dict d;
        d["instances"] = r.instances;
        d["violations"] = r.violations;
        d["max_ratio"] = r.max_ratio;
        d["max_closed_form_error"] = r.max_closed_form_error;
        d["holds"] = r.holds();
        return d;
      },
      py::arg("instances") = 1000, py::arg("seed") = 0, py::arg("t_max") = 100);
}
