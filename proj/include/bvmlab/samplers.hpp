#pragma once

#include "bvmlab/common.hpp"
#include "bvmlab/posterior_core.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace bvmlab {

enum class ChainKind { RwmReflect, IndependenceGauss };

std::string to_string(ChainKind kind);
ChainKind chain_kind_from_string(const std::string& s);

enum class ChainStart { TruthPerturbed, PriorDraw };

struct ChainConfig {
  ChainKind kind = ChainKind::RwmReflect;
  double step_scale = 1.0;  ///< proposal std is step_scale / sqrt(n) (step_scale itself when n = 0)
  int n_steps = 10000;
  int n_burn = 2000;
  int thin = 1;
  std::uint64_t seed = 0;
  ChainStart start = ChainStart::TruthPerturbed;

  /// step_scale 2.4/sqrt(d), burn-in 20% of n_steps.
  static ChainConfig defaults(Index d, int n_steps, std::uint64_t seed);
  void validate() const;
};

/// Kept draws after burn-in and thinning.
struct SampleSet {
  std::vector<Vector> samples;
  std::vector<double> log_density;  ///< unnormalized log posterior of each kept draw
  double acceptance_rate = 0.0;     ///< over all post-burn-in steps
  Index dim() const { return samples.empty() ? 0 : samples.front().size(); }
};

/// Folds x into [lo, hi] by repeated mirroring at the endpoints. Identity inside the interval.
double reflect_into(double x, double lo, double hi);
Vector reflect_into(const Vector& x, const Bounds& bounds);

/// Random-walk Metropolis with an isotropic Gaussian proposal reflected into the box.
SampleSet run_rwm(const PosteriorSpec& spec, const ChainConfig& cfg);

/// Independence Metropolis-Hastings with proposal N(center_orig, cov_orig) restricted to the box.
SampleSet run_independence(const PosteriorSpec& spec, const GaussianApprox& approx, const ChainConfig& cfg);

/// Per-component effective sample size using Geyer's initial positive sequence.
/// Needs at least 100 samples. A constant component has ESS 1.
Vector ess(const SampleSet& samples);
double ess_1d(const std::vector<double>& chain);

/// Flat layout: uint64 d, uint64 count, then count*d float64 values row-major (little endian host order).
void write_chain_binary(const std::filesystem::path& path, const SampleSet& samples);
SampleSet read_chain_binary(const std::filesystem::path& path);

}  // namespace bvmlab
