// bvm-lab: command-line front end. Every subcommand writes JSON (or CSV/SVG for sweep)
// that depends only on its inputs and seeds.

#include "bvmlab/assumption_audit.hpp"
#include "bvmlab/bvm_diagnostics.hpp"
#include "bvmlab/elliptic_forward.hpp"
#include "bvmlab/experiment_runner.hpp"
#include "bvmlab/jacobian_ops.hpp"
#include "bvmlab/posterior_core.hpp"
#include "bvmlab/samplers.hpp"
#include "bvmlab/serialization.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <string>
#include <vector>

using namespace bvmlab;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct ProblemOptions {
  double f = 1.0;
  double g = 1.0;
  double q_min = Bounds{}.q_min;
  double q_max = Bounds{}.q_max;

  void attach(CLI::App* cmd) {
    cmd->add_option("--f", f, "constant source term")->capture_default_str();
    cmd->add_option("--g", g, "constant Dirichlet data")->capture_default_str();
    cmd->add_option("--q-min", q_min, "lower bound of the admissible box")->capture_default_str();
    cmd->add_option("--q-max", q_max, "upper bound of the admissible box")->capture_default_str();
  }
  Bounds bounds() const {
    if (!(q_min >= 0.0 && q_min < q_max)) throw std::invalid_argument("need 0 <= q-min < q-max");
    return {q_min, q_max};
  }
  MediumProblem problem(int N) const { return {N, f, g, bounds()}; }
};

// ------------------------------------------------------------------------------------------
// solve

struct SolveArgs {
  int N = 4;
  std::string q_file;
  std::string out;
  ProblemOptions problem;
};

int cmd_solve(const SolveArgs& a) {
  const GridSpec grid(a.N);
  const Bounds bounds = a.problem.bounds();
  MediumField medium = default_truth(grid, bounds);
  if (!a.q_file.empty()) {
    json q = read_json_file(a.q_file);
    if (q.is_object()) q = q.at("q");
    medium.q = vector_from_json(q);
    if (medium.q.size() != grid.dim()) {
      throw DimensionError("q has " + std::to_string(medium.q.size()) + " entries, grid needs " +
                           std::to_string(grid.dim()));
    }
  }
  const ProblemData data = ProblemData::constant(grid, a.problem.f, a.problem.g);
  const ForwardSystem sys = assemble(grid, medium, data);
  const ForwardSolution sol = solve(sys, data);
  const MaxPrincipleReport mp = max_principle_check(sol, grid, data);
  write_json_file(a.out, json{{"grid", grid_metadata(grid)},
                              {"f", a.problem.f},
                              {"g", a.problem.g},
                              {"q_min", bounds.q_min},
                              {"q_max", bounds.q_max},
                              {"q", to_json(medium.q)},
                              {"u", to_json(sol.u)},
                              {"max_principle",
                               {{"min_u", mp.min_u},
                                {"max_u", mp.max_u},
                                {"data_positive", mp.data_positive},
                                {"pass", mp.pass}}}});
  return 0;
}

// ------------------------------------------------------------------------------------------
// spectra

struct SpectraArgs {
  std::vector<int> grids{4, 6, 8};
  std::string out;
  ProblemOptions problem;
};

int cmd_spectra(const SpectraArgs& a) {
  json rows = json::array();
  std::vector<SpectralReport> reports;
  for (int N : a.grids) {
    const GridSpec grid(N);
    const MediumField truth = default_truth(grid, a.problem.bounds());
    const ProblemData data = ProblemData::constant(grid, a.problem.f, a.problem.g);
    const ForwardSystem sys = assemble(grid, truth, data);
    const SpectralReport r = spectral_report(jacobian(sys, solve(sys, data)));
    reports.push_back(r);

    // assembled A against its closed-form spectrum
    const Matrix A = Matrix(laplacian_matrix(grid));
    Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
    const std::vector<double> analytic = eigenvalues_of_A(grid);
    double eig_err = 0.0;
    for (Index k = 0; k < es.eigenvalues().size(); ++k) {
      eig_err = std::max(eig_err, std::abs(es.eigenvalues()[k] - analytic[static_cast<std::size_t>(k)]));
    }
    rows.push_back({{"N", N},
                    {"d", r.d},
                    {"sigma_min", r.sigma_min},
                    {"sigma_max", r.sigma_max},
                    {"sigma_min_inv", r.sigma_min_inv},
                    {"sigma_max_inv", r.sigma_max_inv},
                    {"asymmetry", r.asymmetry},
                    {"A_eigen_max_abs_error", eig_err}});
  }
  json report{{"jacobian_at", "2 + sin(pi x) sin(pi y)"}, {"grids", rows}};
  std::vector<double> ds;
  for (const auto& r : reports) ds.push_back(static_cast<double>(r.d));
  std::sort(ds.begin(), ds.end());
  if (std::unique(ds.begin(), ds.end()) - ds.begin() >= 3) {
    const GrowthFit fit = sigma_growth_fit(reports);
    report["growth_fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}};
  } else {
    report["growth_fit"] = nullptr;
  }
  write_json_file(a.out, report);
  return 0;
}

// ------------------------------------------------------------------------------------------
// audit

struct AuditArgs {
  int N = 4;
  int pairs = 200;
  std::uint64_t seed = 1;
  int directions = 20;
  std::string out;
  ProblemOptions problem;
};

json points_json(const std::vector<AuditReport::Point>& pts) {
  json a = json::array();
  for (const auto& p : pts) a.push_back({p.step, p.residual});
  return a;
}

int cmd_audit(const AuditArgs& a) {
  const auto model = a.problem.problem(a.N).model();
  const AuditReport st = audit_stability(*model, a.pairs, a.seed);
  const Vector base = default_truth(model->grid(), model->bounds()).q;
  const std::vector<double> radii{1e-3, 2e-3, 4e-3, 8e-3, 1.6e-2, 3.2e-2};
  const AuditReport lin = audit_linearization(*model, base, radii, a.directions, derive_seed(a.seed, 1));
  write_json_file(a.out, json{{"grid", grid_metadata(model->grid())},
                              {"seed", a.seed},
                              {"sampled_not_exhaustive", true},
                              {"stability",
                               {{"pairs", st.n_pairs},
                                {"lipschitz_upper", st.a2_lower},
                                {"inverse_stability_over_d", st.a2_upper},
                                {"remainder_ratio", st.a3_ratio},
                                {"max_remainder", st.max_residual}}},
                              {"linearization",
                               {{"base", "2 + sin(pi x) sin(pi y)"},
                                {"directions", a.directions},
                                {"radii", radii},
                                {"slope", lin.a3_slope},
                                {"remainder_ratio", lin.a3_ratio},
                                {"points", points_json(lin.points)}}}});
  return 0;
}

// ------------------------------------------------------------------------------------------
// posterior

struct PosteriorArgs {
  int N = 3;
  double n = 1e4;
  std::uint64_t seed = 1;
  std::string prior = "uniform";
  std::string out;
  ProblemOptions problem;
};

int cmd_posterior(const PosteriorArgs& a) {
  const MediumProblem problem = a.problem.problem(a.N);
  const auto model = problem.model();
  const Bounds b = problem.bounds;
  const PriorKind kind = prior_kind_from_string(a.prior);
  const PriorSpec prior = kind == PriorKind::Uniform ? PriorSpec::uniform(b) : PriorSpec::truncated_normal(b);
  const Vector q0 = default_truth(model->grid(), b).q;
  const PosteriorSpec spec = synthesize_data(model, prior, q0, a.n, a.seed);
  json j = posterior_to_json(problem, spec);
  const GaussianApprox approx = gaussian_approx(spec);
  j["gaussian_approx"] = {{"center", to_json(approx.center_orig)},
                          {"delta_n_local", to_json(approx.Delta_n)},
                          {"cov_trace", approx.cov_orig.trace()}};
  write_json_file(a.out, j);
  return 0;
}

// ------------------------------------------------------------------------------------------
// sample

struct SampleArgs {
  std::string spec;
  std::string kind = "rwm";
  int steps = 200000;
  int burn = -1;
  int thin = 1;
  std::string step_scale = "default";
  std::uint64_t seed = 1;
  std::string start = "truth";
  std::string out;
};

int cmd_sample(const SampleArgs& a) {
  const PosteriorFile pf = posterior_from_json(read_json_file(a.spec));
  const Index d = pf.spec.dim();
  ChainConfig cfg = ChainConfig::defaults(d, a.steps, a.seed);
  cfg.kind = chain_kind_from_string(a.kind);
  if (a.burn >= 0) cfg.n_burn = a.burn;
  cfg.thin = a.thin;
  if (a.start == "prior") {
    cfg.start = ChainStart::PriorDraw;
  } else if (a.start != "truth") {
    throw std::invalid_argument("--start must be truth or prior");
  }
  const GaussianApprox approx = gaussian_approx(pf.spec);
  if (a.step_scale == "auto") {
    // match the proposal to the Gaussian approximation's average local scale
    cfg.step_scale *= std::sqrt(approx.Sigma.trace() / static_cast<double>(d));
  } else if (a.step_scale != "default") {
    cfg.step_scale = std::stod(a.step_scale);
  }
  cfg.validate();
  const SampleSet s = cfg.kind == ChainKind::RwmReflect ? run_rwm(pf.spec, cfg) : run_independence(pf.spec, approx, cfg);
  write_chain_binary(a.out, s);
  json side = chain_sidecar(s, cfg, fs::path(a.out).filename().string());
  side["spec"] = fs::path(a.spec).filename().string();
  write_json_file(a.out + ".json", side);
  return 0;
}

// ------------------------------------------------------------------------------------------
// tv

struct TvArgs {
  std::string spec;
  std::string method = "auto";
  int cells = 4000;
  long m = 100000;
  std::uint64_t seed = 1;
  std::string out;
};

json tv_json(const TVEstimate& t) {
  return {{"method", to_string(t.method)}, {"value", t.value}, {"std_err", t.std_err}, {"m", t.m}};
}

int cmd_tv(const TvArgs& a) {
  const PosteriorFile pf = posterior_from_json(read_json_file(a.spec));
  const GaussianApprox approx = gaussian_approx(pf.spec);
  std::string method = a.method;
  if (method == "auto") method = pf.spec.dim() <= 2 ? "grid" : "importance";
  json j{{"d", pf.spec.dim()}, {"n", pf.spec.n}};
  if (method == "grid") {
    j["tv"] = tv_json(tv_grid(pf.spec, approx, a.cells));
  } else if (method == "importance") {
    j["tv"] = tv_json(tv_importance(pf.spec, approx, a.m, a.seed));
  } else if (method == "both") {
    j["tv"] = tv_json(tv_grid(pf.spec, approx, a.cells));
    j["tv_importance"] = tv_json(tv_importance(pf.spec, approx, a.m, a.seed));
  } else {
    throw std::invalid_argument("--method must be auto, grid, importance or both");
  }
  write_json_file(a.out, j);
  return 0;
}

// ------------------------------------------------------------------------------------------
// coverage

struct CoverageArgs {
  std::string spec;
  std::vector<double> alphas{0.1};
  int reps = 200;
  std::uint64_t seed = 1;
  std::string set = "ellipsoid";
  int chain_steps = 4000;
  std::string out;
};

int cmd_coverage(const CoverageArgs& a) {
  const PosteriorFile pf = posterior_from_json(read_json_file(a.spec));
  CoverageOptions opts;
  opts.kind = credible_set_from_string(a.set);
  opts.chain_steps = a.chain_steps;
  json results = json::array();
  for (double alpha : a.alphas) {
    const CoverageResult c =
        credible_coverage(pf.spec.model, pf.spec.prior, pf.spec.q0, pf.spec.n, alpha, a.reps, a.seed, opts);
    results.push_back({{"alpha", c.alpha},
                       {"nominal", 1.0 - c.alpha},
                       {"n_reps", c.n_reps},
                       {"hits", c.hits},
                       {"coverage", c.coverage},
                       {"ci_halfwidth", c.ci_halfwidth}});
  }
  write_json_file(a.out, json{{"d", pf.spec.dim()},
                              {"n", pf.spec.n},
                              {"set", to_string(opts.kind)},
                              {"seed", a.seed},
                              {"results", results}});
  return 0;
}

// ------------------------------------------------------------------------------------------
// contraction

struct ContractionArgs {
  std::string spec;
  std::string chain;
  double K = 1.0;
  std::vector<double> M{1.0, 2.0, 4.0};
  std::string out;
};

int cmd_contraction(const ContractionArgs& a) {
  const PosteriorFile pf = posterior_from_json(read_json_file(a.spec));
  const SampleSet s = read_chain_binary(a.chain);
  if (s.dim() != pf.spec.dim()) throw DimensionError("chain dimension does not match the posterior file");
  const double d = static_cast<double>(pf.spec.dim());
  const GaussianApprox approx = gaussian_approx(pf.spec);
  json probes = json::array();
  for (const auto& r : contraction_probe(s, pf.spec.q0, pf.spec.n, d, a.K, a.M)) {
    probes.push_back({{"M", r.M}, {"eps_n", r.eps_n}, {"mass_outside", r.mass_outside}});
  }
  const TailMass t = tail_mass_probe(s, approx, pf.spec.q0, pf.spec.n, d, a.K);
  json j{{"d", pf.spec.dim()},
         {"n", pf.spec.n},
         {"K", a.K},
         {"samples", s.samples.size()},
         {"contraction", probes},
         {"tail", {{"radius", t.radius}, {"posterior_tail", t.posterior_tail}, {"gaussian_tail", t.gaussian_tail}}}};
  try {
    const MomentGap g = moment_gap(s, approx);
    j["moments"] = {{"mean_gap", g.mean_gap},
                    {"cov_gap", g.cov_gap},
                    {"mean_gap_rel", g.mean_gap_rel},
                    {"cov_gap_rel", g.cov_gap_rel},
                    {"min_ess", g.min_ess}};
  } catch (const std::exception& e) {
    j["moments"] = {{"skipped", e.what()}};
  }
  write_json_file(a.out, j);
  return 0;
}

// ------------------------------------------------------------------------------------------
// sweep

struct SweepArgs {
  std::string plan;
  std::string output_dir;
};

int cmd_sweep(const SweepArgs& a) {
  SweepPlan plan = SweepPlan::from_json(read_json_file(a.plan));
  if (!a.output_dir.empty()) plan.output_dir = a.output_dir;
  const SweepResult r = run_sweep(plan);
  std::cout << r.records.size() << " cells, " << r.computed_cells << " computed, " << r.failed_cells
            << " failed; records in " << (plan.output_dir / "records.csv").string() << '\n';
  for (const auto& rec : r.records) {
    if (rec.status != "ok") std::cerr << "cell N=" << rec.N << " n=" << rec.n << " failed: " << rec.error << '\n';
  }
  return r.failed_cells == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bernstein-von Mises laboratory for the discrete inverse medium problem"};
  app.require_subcommand(1);

  SolveArgs solve_a;
  auto* solve_cmd = app.add_subcommand("solve", "solve the finite-difference forward problem");
  solve_cmd->add_option("--n-grid", solve_a.N, "grid subdivisions N (d = (N-1)^2)")->required();
  solve_cmd->add_option("--q-file", solve_a.q_file, "JSON array (or {\"q\": [...]}) of coefficients; default 2 + sin sin");
  solve_cmd->add_option("--out", solve_a.out)->required();
  solve_a.problem.attach(solve_cmd);

  SpectraArgs spectra_a;
  auto* spectra_cmd = app.add_subcommand("spectra", "singular values of the forward Jacobian across grids");
  spectra_cmd->add_option("--n-grid", spectra_a.grids, "comma-separated grid sizes")->delimiter(',')->required();
  spectra_cmd->add_option("--out", spectra_a.out)->required();
  spectra_a.problem.attach(spectra_cmd);

  AuditArgs audit_a;
  auto* audit_cmd = app.add_subcommand("audit", "sampled stability and linearization constants");
  audit_cmd->add_option("--n-grid", audit_a.N)->required();
  audit_cmd->add_option("--pairs", audit_a.pairs)->capture_default_str();
  audit_cmd->add_option("--directions", audit_a.directions)->capture_default_str();
  audit_cmd->add_option("--seed", audit_a.seed)->capture_default_str();
  audit_cmd->add_option("--out", audit_a.out)->required();
  audit_a.problem.attach(audit_cmd);

  PosteriorArgs post_a;
  auto* post_cmd = app.add_subcommand("posterior", "synthesize data and write a posterior file");
  post_cmd->add_option("--n-grid", post_a.N)->required();
  post_cmd->add_option("--noise-n", post_a.n, "noise parameter n")->required();
  post_cmd->add_option("--seed", post_a.seed)->capture_default_str();
  post_cmd->add_option("--prior", post_a.prior)->check(CLI::IsMember({"uniform", "tnorm"}))->capture_default_str();
  post_cmd->add_option("--out", post_a.out)->required();
  post_a.problem.attach(post_cmd);

  SampleArgs sample_a;
  auto* sample_cmd = app.add_subcommand("sample", "run a Metropolis chain on a posterior file");
  sample_cmd->add_option("--spec", sample_a.spec)->required();
  sample_cmd->add_option("--kind", sample_a.kind)->check(CLI::IsMember({"rwm", "independence"}))->capture_default_str();
  sample_cmd->add_option("--steps", sample_a.steps)->capture_default_str();
  sample_cmd->add_option("--burn", sample_a.burn, "burn-in steps (default 20% of steps)");
  sample_cmd->add_option("--thin", sample_a.thin)->capture_default_str();
  sample_cmd->add_option("--step-scale", sample_a.step_scale, "number, 'default' (2.4/sqrt d) or 'auto'")
      ->capture_default_str();
  sample_cmd->add_option("--start", sample_a.start, "truth or prior")->capture_default_str();
  sample_cmd->add_option("--seed", sample_a.seed)->capture_default_str();
  sample_cmd->add_option("--out", sample_a.out)->required();

  TvArgs tv_a;
  auto* tv_cmd = app.add_subcommand("tv", "total variation between posterior and its Gaussian approximation");
  tv_cmd->add_option("--spec", tv_a.spec)->required();
  tv_cmd->add_option("--method", tv_a.method, "auto, grid, importance or both")->capture_default_str();
  tv_cmd->add_option("--cells", tv_a.cells, "grid cells per dimension")->capture_default_str();
  tv_cmd->add_option("--m", tv_a.m, "importance samples")->capture_default_str();
  tv_cmd->add_option("--seed", tv_a.seed)->capture_default_str();
  tv_cmd->add_option("--out", tv_a.out)->required();

  CoverageArgs cov_a;
  auto* cov_cmd = app.add_subcommand("coverage", "frequentist coverage of credible sets");
  cov_cmd->add_option("--spec", cov_a.spec)->required();
  cov_cmd->add_option("--alpha", cov_a.alphas, "comma-separated levels")->delimiter(',');
  cov_cmd->add_option("--reps", cov_a.reps)->capture_default_str();
  cov_cmd->add_option("--seed", cov_a.seed)->capture_default_str();
  cov_cmd->add_option("--set", cov_a.set)->check(CLI::IsMember({"ellipsoid", "hpd"}))->capture_default_str();
  cov_cmd->add_option("--chain-steps", cov_a.chain_steps)->capture_default_str();
  cov_cmd->add_option("--out", cov_a.out)->required();

  ContractionArgs con_a;
  auto* con_cmd = app.add_subcommand("contraction", "posterior contraction, tail and moment probes from a chain");
  con_cmd->add_option("--spec", con_a.spec)->required();
  con_cmd->add_option("--chain", con_a.chain)->required();
  con_cmd->add_option("--K", con_a.K)->capture_default_str();
  con_cmd->add_option("--M", con_a.M, "comma-separated radius multipliers")->delimiter(',');
  con_cmd->add_option("--out", con_a.out)->required();

  SweepArgs sweep_a;
  auto* sweep_cmd = app.add_subcommand("sweep", "run a (d, n) sweep and emit records and plots");
  sweep_cmd->add_option("--plan", sweep_a.plan)->required();
  sweep_cmd->add_option("--output-dir", sweep_a.output_dir, "overrides output_dir in the plan");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*solve_cmd) return cmd_solve(solve_a);
    if (*spectra_cmd) return cmd_spectra(spectra_a);
    if (*audit_cmd) return cmd_audit(audit_a);
    if (*post_cmd) return cmd_posterior(post_a);
    if (*sample_cmd) return cmd_sample(sample_a);
    if (*tv_cmd) return cmd_tv(tv_a);
    if (*cov_cmd) return cmd_coverage(cov_a);
    if (*con_cmd) return cmd_contraction(con_a);
    if (*sweep_cmd) return cmd_sweep(sweep_a);
  } catch (const std::exception& e) {
    std::cerr << "bvm-lab: error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
