#pragma once

#include "bvmlab/elliptic_forward.hpp"
#include "bvmlab/posterior_core.hpp"
#include "bvmlab/samplers.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>

namespace bvmlab {

nlohmann::json to_json(const Vector& v);
Vector vector_from_json(const nlohmann::json& j);

/// N, h, d and the ordering convention of every grid vector.
nlohmann::json grid_metadata(const GridSpec& grid);

nlohmann::json to_json(const PriorSpec& prior);
PriorSpec prior_from_json(const nlohmann::json& j);

/// Constant-data medium problem on an N grid: what a posterior file needs to rebuild G.
struct MediumProblem {
  int N = 3;
  double f = 1.0;
  double g = 1.0;
  Bounds bounds;

  std::shared_ptr<const MediumForwardModel> model() const;
};

struct PosteriorFile {
  MediumProblem problem;
  PosteriorSpec spec;
};

/// Stores problem, grid metadata, prior, n, seed, q0, eta and Y_n.
nlohmann::json posterior_to_json(const MediumProblem& problem, const PosteriorSpec& spec);

/// Rebuilds the posterior from problem, prior, q0, eta and n, then checks the stored Y_n
/// against the recomputed one. Throws std::invalid_argument on a mismatch.
PosteriorFile posterior_from_json(const nlohmann::json& j);

nlohmann::json chain_sidecar(const SampleSet& samples, const ChainConfig& cfg, const std::string& chain_file);

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed with a trailing newline; written to a temporary file and renamed into place.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace bvmlab
