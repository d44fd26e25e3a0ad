#include "bvmlab/assumption_audit.hpp"
#include "bvmlab/bvm_diagnostics.hpp"
#include "bvmlab/elliptic_forward.hpp"
#include "bvmlab/experiment_runner.hpp"
#include "bvmlab/jacobian_ops.hpp"
#include "bvmlab/posterior_core.hpp"
#include "bvmlab/serialization.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace bvmlab;

namespace {

MediumProblem problem(int N, double f, double g, double q_min, double q_max) {
  return MediumProblem{N, f, g, Bounds{q_min, q_max}};
}

// Posterior for the constant-data medium problem, kept together with what rebuilds it.
struct Posterior {
  PosteriorFile file;

  const PosteriorSpec& spec() const { return file.spec; }
};

py::dict spectral_dict(const SpectralReport& r) {
  py::dict out;
  out["d"] = r.d;
  out["sigma_min"] = r.sigma_min;
  out["sigma_max"] = r.sigma_max;
  out["sigma_min_inv"] = r.sigma_min_inv;
  out["sigma_max_inv"] = r.sigma_max_inv;
  out["asymmetry"] = r.asymmetry;
  return out;
}

py::dict tv_dict(const TVEstimate& t) {
  py::dict out;
  out["value"] = t.value;
  out["std_err"] = t.std_err;
  out["method"] = to_string(t.method);
  out["m"] = t.m;
  return out;
}

}  // namespace

PYBIND11_MODULE(_bvmlab, m) {
  py::register_exception<BoundsError>(m, "BoundsError", PyExc_ValueError);

  m.def("eigenvalues_of_A", [](int N) { return eigenvalues_of_A(GridSpec(N)); }, py::arg("N"));
  m.def("default_truth", [](int N) { return Vector(default_truth(GridSpec(N)).q); }, py::arg("N"));

  m.def(
      "solve",
      [](int N, const Vector& q, double f, double g, double q_min, double q_max) {
        return problem(N, f, g, q_min, q_max).model()->evaluate(q);
      },
      py::arg("N"), py::arg("q"), py::arg("f") = 1.0, py::arg("g") = 1.0, py::arg("q_min") = 0.1,
      py::arg("q_max") = 10.0);
  m.def(
      "jacobian",
      [](int N, const Vector& q, double f, double g, double q_min, double q_max) {
        return problem(N, f, g, q_min, q_max).model()->jacobian(q);
      },
      py::arg("N"), py::arg("q"), py::arg("f") = 1.0, py::arg("g") = 1.0, py::arg("q_min") = 0.1,
      py::arg("q_max") = 10.0);
  m.def("spectral_report", [](const Matrix& J) { return spectral_dict(spectral_report(J)); }, py::arg("J"));
  m.def(
      "linearization_slope",
      [](int N, const std::vector<double>& radii, int n_dirs, std::uint64_t seed) {
        const auto model = problem(N, 1.0, 1.0, 0.1, 10.0).model();
        return audit_linearization(*model, default_truth(model->grid()).q, radii, n_dirs, seed).a3_slope;
      },
      py::arg("N"), py::arg("radii"), py::arg("n_dirs") = 20, py::arg("seed") = 0);

  m.def("K_of_d", [](double d, double K) { return K_of_d(d, K); }, py::arg("d"), py::arg("K") = 1.0);
  m.def(
      "delta_n",
      [](double d, double n, double K, const std::string& variant) {
        if (variant != "cubic_log" && variant != "general") throw py::value_error("variant: cubic_log or general");
        return delta_n(d, n, K, variant == "general" ? DeltaVariant::General : DeltaVariant::CubicLog);
      },
      py::arg("d"), py::arg("n"), py::arg("K") = 1.0, py::arg("variant") = "cubic_log");
  m.def(
      "gaussian_ball_tail",
      [](const Vector& mean, const Matrix& cov, double radius) {
        return gaussian_ball_tail(MultivariateNormal(mean, cov), radius);
      },
      py::arg("mean"), py::arg("cov"), py::arg("radius"));

  py::class_<Posterior>(m, "Posterior")
      .def_static(
          "synthesize",
          [](int N, double n, std::uint64_t seed, const std::string& prior, double f, double g) {
            const MediumProblem p{N, f, g, Bounds{}};
            const auto model = p.model();
            const PriorSpec pr = prior_kind_from_string(prior) == PriorKind::Uniform
                                     ? PriorSpec::uniform(p.bounds)
                                     : PriorSpec::truncated_normal(p.bounds);
            return Posterior{{p, synthesize_data(model, pr, default_truth(model->grid()).q, n, seed)}};
          },
          py::arg("N"), py::arg("n"), py::arg("seed") = 0, py::arg("prior") = "uniform", py::arg("f") = 1.0,
          py::arg("g") = 1.0)
      .def_static("from_json",
                  [](const std::string& text) { return Posterior{posterior_from_json(nlohmann::json::parse(text))}; })
      .def("to_json", [](const Posterior& p) { return posterior_to_json(p.file.problem, p.spec()).dump(2); })
      .def_property_readonly("dim", [](const Posterior& p) { return p.spec().dim(); })
      .def_property_readonly("n", [](const Posterior& p) { return p.spec().n; })
      .def_property_readonly("q0", [](const Posterior& p) { return p.spec().q0; })
      .def_property_readonly("y", [](const Posterior& p) { return p.spec().y; })
      .def("log_density", [](const Posterior& p, const Vector& q) { return log_posterior_unnorm(p.spec(), q); })
      .def("gaussian_approx",
           [](const Posterior& p) {
             const GaussianApprox a = gaussian_approx(p.spec());
             py::dict out;
             out["J0"] = a.J0;
             out["Sigma"] = a.Sigma;
             out["Delta_n"] = a.Delta_n;
             out["center"] = a.center_orig;
             out["cov"] = a.cov_orig;
             return out;
           })
      .def(
          "tv",
          [](const Posterior& p, const std::string& method, long m, std::uint64_t seed, int cells) {
            const GaussianApprox a = gaussian_approx(p.spec());
            if (method == "grid") return tv_dict(tv_grid(p.spec(), a, cells));
            if (method == "importance") return tv_dict(tv_importance(p.spec(), a, m, seed));
            throw py::value_error("method: grid or importance");
          },
          py::arg("method") = "importance", py::arg("m") = 20000, py::arg("seed") = 0, py::arg("cells") = 2000);

  // plan and records cross the boundary as JSON text; the Python side wraps them in dicts
  m.def(
      "run_sweep_json",
      [](const std::string& plan_text) {
        SweepResult r;
        {
          py::gil_scoped_release release;
          r = run_sweep(SweepPlan::from_json(nlohmann::json::parse(plan_text)));
        }
        nlohmann::json out = nlohmann::json::array();
        for (const auto& rec : r.records) out.push_back(record_to_json(rec));
        return nlohmann::json{{"records", out}, {"computed_cells", r.computed_cells}, {"failed_cells", r.failed_cells}}
            .dump();
      },
      py::arg("plan"));
}
