#include "bvmlab/serialization.hpp"

#include <cmath>
#include <fstream>

namespace bvmlab {

using nlohmann::json;

json to_json(const Vector& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v[k]);
  return a;
}

Vector vector_from_json(const json& j) {
  if (!j.is_array()) throw std::invalid_argument("expected a JSON array of numbers");
  Vector v(static_cast<Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw std::invalid_argument("expected a JSON array of numbers");
    v[static_cast<Index>(k)] = j[k].get<double>();
  }
  return v;
}

json grid_metadata(const GridSpec& grid) {
  return json{{"N", grid.subdivisions()},
              {"h", grid.spacing()},
              {"d", grid.dim()},
              {"ordering", "row-wise, k = (j-1)(N-1) + (i-1), node (i,j) at (i h, j h)"}};
}

json to_json(const PriorSpec& prior) {
  json j{{"kind", to_string(prior.kind)}, {"q_min", prior.bounds.q_min}, {"q_max", prior.bounds.q_max}};
  if (prior.kind == PriorKind::TruncatedNormal) {
    j["mean"] = prior.mean;
    j["std"] = prior.std;
  }
  return j;
}

PriorSpec prior_from_json(const json& j) {
  const Bounds b{j.at("q_min").get<double>(), j.at("q_max").get<double>()};
  const PriorKind kind = prior_kind_from_string(j.at("kind").get<std::string>());
  if (kind == PriorKind::Uniform) return PriorSpec::uniform(b);
  PriorSpec p = PriorSpec::truncated_normal(b);
  p.mean = j.value("mean", p.mean);
  p.std = j.value("std", p.std);
  return p;
}

std::shared_ptr<const MediumForwardModel> MediumProblem::model() const {
  const GridSpec grid(N);
  return std::make_shared<const MediumForwardModel>(grid, ProblemData::constant(grid, f, g), bounds);
}

json posterior_to_json(const MediumProblem& problem, const PosteriorSpec& spec) {
  return json{{"problem",
               {{"N", problem.N},
                {"f", problem.f},
                {"g", problem.g},
                {"q_min", problem.bounds.q_min},
                {"q_max", problem.bounds.q_max}}},
              {"grid", grid_metadata(GridSpec(problem.N))},
              {"prior", to_json(spec.prior)},
              {"n", spec.n},
              {"seed", spec.seed},
              {"q0", to_json(spec.q0)},
              {"eta", to_json(spec.eta)},
              {"y", to_json(spec.y)}};
}

PosteriorFile posterior_from_json(const json& j) {
  PosteriorFile out;
  const json& p = j.at("problem");
  out.problem.N = p.at("N").get<int>();
  out.problem.f = p.value("f", 1.0);
  out.problem.g = p.value("g", 1.0);
  out.problem.bounds = {p.value("q_min", Bounds{}.q_min), p.value("q_max", Bounds{}.q_max)};
  const auto model = out.problem.model();
  const Vector q0 = vector_from_json(j.at("q0"));
  const Vector eta = vector_from_json(j.at("eta"));
  if (q0.size() != model->dim() || eta.size() != model->dim()) {
    throw DimensionError("posterior file: q0/eta length does not match the grid");
  }
  out.spec = make_posterior(model, prior_from_json(j.at("prior")), q0, j.at("n").get<double>(), eta);
  out.spec.seed = j.value("seed", std::uint64_t{0});
  if (j.contains("y")) {
    const Vector y = vector_from_json(j.at("y"));
    if (y.size() != out.spec.y.size() || (y - out.spec.y).norm() > 1e-9 * (1.0 + y.norm())) {
      throw std::invalid_argument("posterior file: stored y does not match G(q0) + eta/sqrt(n)");
    }
  }
  return out;
}

json chain_sidecar(const SampleSet& samples, const ChainConfig& cfg, const std::string& chain_file) {
  return json{{"chain_file", chain_file},
              {"layout", "uint64 d, uint64 count, then count*d float64 row-major, little-endian"},
              {"d", samples.dim()},
              {"count", samples.samples.size()},
              {"kind", to_string(cfg.kind)},
              {"step_scale", cfg.step_scale},
              {"steps", cfg.n_steps},
              {"burn_in", cfg.n_burn},
              {"thin", cfg.thin},
              {"seed", cfg.seed},
              {"acceptance_rate", samples.acceptance_rate}};
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(is);
  } catch (const json::parse_error& e) {
    throw std::runtime_error("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    os << j.dump(2) << '\n';
    if (!os) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace bvmlab
