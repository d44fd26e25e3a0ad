#include "bvmlab/samplers.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

namespace bvmlab {

std::string to_string(ChainKind kind) { return kind == ChainKind::RwmReflect ? "rwm" : "independence"; }

ChainKind chain_kind_from_string(const std::string& s) {
  if (s == "rwm" || s == "rwm-reflect") return ChainKind::RwmReflect;
  if (s == "independence" || s == "independence-gauss") return ChainKind::IndependenceGauss;
  throw std::invalid_argument("unknown chain kind '" + s + "' (expected rwm|independence)");
}

ChainConfig ChainConfig::defaults(Index d, int n_steps, std::uint64_t seed) {
  ChainConfig cfg;
  cfg.step_scale = 2.4 / std::sqrt(static_cast<double>(d));
  cfg.n_steps = n_steps;
  cfg.n_burn = n_steps / 5;
  cfg.seed = seed;
  return cfg;
}

void ChainConfig::validate() const {
  if (!(n_steps > n_burn) || n_burn < 0) throw std::invalid_argument("ChainConfig: need n_steps > n_burn >= 0");
  if (thin < 1) throw std::invalid_argument("ChainConfig: thin must be >= 1");
  if (!(step_scale > 0.0)) throw std::invalid_argument("ChainConfig: step_scale must be positive");
}

double reflect_into(double x, double lo, double hi) {
  if (x >= lo && x <= hi) return x;
  const double width = hi - lo;
  if (width <= 0.0) return lo;
  // Mirroring at both ends is periodic with period 2 * width.
  double r = std::fmod(x - lo, 2.0 * width);
  if (r < 0.0) r += 2.0 * width;
  return r <= width ? lo + r : hi - (r - width);
}

Vector reflect_into(const Vector& x, const Bounds& bounds) {
  Vector out(x.size());
  for (Index k = 0; k < x.size(); ++k) out[k] = reflect_into(x[k], bounds.q_min, bounds.q_max);
  return out;
}

namespace {

void keep_if_due(SampleSet& out, const ChainConfig& cfg, int step, const Vector& x, double lp) {
  if (step >= cfg.n_burn && (step - cfg.n_burn) % cfg.thin == 0) {
    out.samples.push_back(x);
    out.log_density.push_back(lp);
  }
}

}  // namespace

SampleSet run_rwm(const PosteriorSpec& spec, const ChainConfig& cfg) {
  cfg.validate();
  const Bounds box = spec.model->bounds();
  const Index d = spec.dim();
  const double proposal_std = spec.n > 0.0 ? cfg.step_scale / std::sqrt(spec.n) : cfg.step_scale;

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);

  Vector x = cfg.start == ChainStart::PriorDraw
                 ? spec.prior.sample(d, rng)
                 : reflect_into(Vector(spec.q0 + proposal_std * standard_normal_vector(d, rng)), box);
  double lp = log_posterior_unnorm(spec, x);
  if (!std::isfinite(lp)) throw std::domain_error("run_rwm: initial point has zero posterior density");

  SampleSet out;
  long accepted_burn = 0;
  long accepted_main = 0;
  for (int step = 0; step < cfg.n_steps; ++step) {
    const Vector y = reflect_into(Vector(x + proposal_std * standard_normal_vector(d, rng)), box);
    const double lp_y = log_posterior_unnorm(spec, y);
    if (std::log(uniform(rng)) < lp_y - lp) {
      x = y;
      lp = lp_y;
      (step < cfg.n_burn ? accepted_burn : accepted_main) += 1;
    }
    if (step + 1 == cfg.n_burn && accepted_burn == 0) {
      throw std::runtime_error("run_rwm: no proposal accepted during burn-in; decrease step_scale");
    }
    keep_if_due(out, cfg, step, x, lp);
  }
  out.acceptance_rate = static_cast<double>(accepted_main) / (cfg.n_steps - cfg.n_burn);
  return out;
}

SampleSet run_independence(const PosteriorSpec& spec, const GaussianApprox& approx, const ChainConfig& cfg) {
  cfg.validate();
  const Bounds box = spec.model->bounds();
  const MultivariateNormal proposal = approx.original();
  if (proposal.dim() != spec.dim()) throw DimensionError("run_independence: approximation dimension");

  Rng rng(cfg.seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  long attempts = 0;
  long inside = 0;
  auto draw = [&]() -> Vector {
    for (;;) {
      Vector y = proposal.sample(rng);
      ++attempts;
      if (box.contains(y)) {
        ++inside;
        return y;
      }
      if (attempts >= 1000 && inside * 100 < attempts) {
        throw std::runtime_error(
            "run_independence: more than 99% of Gaussian proposals fall outside the admissible box");
      }
    }
  };

  Vector x = draw();
  double lp = log_posterior_unnorm(spec, x);
  double lq = proposal.log_pdf(x);
  SampleSet out;
  long accepted_main = 0;
  for (int step = 0; step < cfg.n_steps; ++step) {
    const Vector y = draw();
    const double lp_y = log_posterior_unnorm(spec, y);
    const double lq_y = proposal.log_pdf(y);
    const double log_ratio = (lp_y - lp) + (lq - lq_y);
    if (!std::isfinite(lp) || std::log(uniform(rng)) < log_ratio) {
      x = y;
      lp = lp_y;
      lq = lq_y;
      if (step >= cfg.n_burn) ++accepted_main;
    }
    keep_if_due(out, cfg, step, x, lp);
  }
  out.acceptance_rate = static_cast<double>(accepted_main) / (cfg.n_steps - cfg.n_burn);
  return out;
}

double ess_1d(const std::vector<double>& chain) {
  const std::size_t n = chain.size();
  if (n < 100) throw std::invalid_argument("ess: need at least 100 samples");
  double mean = 0.0;
  for (double v : chain) mean += v;
  mean /= static_cast<double>(n);
  auto autocov = [&](std::size_t lag) {
    double acc = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) acc += (chain[t] - mean) * (chain[t + lag] - mean);
    return acc / static_cast<double>(n);
  };
  const double gamma0 = autocov(0);
  if (!(gamma0 > 0.0)) return 1.0;

  double tau = -1.0;
  double prev_pair = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; 2 * m + 1 < n; ++m) {
    double pair = (autocov(2 * m) + autocov(2 * m + 1)) / gamma0;
    if (pair <= 0.0) break;
    pair = std::min(pair, prev_pair);
    tau += 2.0 * pair;
    prev_pair = pair;
  }
  const double value = static_cast<double>(n) / tau;
  return std::clamp(value, 1.0, static_cast<double>(n));
}

Vector ess(const SampleSet& samples) {
  const Index d = samples.dim();
  Vector out(d);
  std::vector<double> component(samples.samples.size());
  for (Index k = 0; k < d; ++k) {
    for (std::size_t t = 0; t < samples.samples.size(); ++t) component[t] = samples.samples[t][k];
    out[k] = ess_1d(component);
  }
  return out;
}

void write_chain_binary(const std::filesystem::path& path, const SampleSet& samples) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  const std::uint64_t d = static_cast<std::uint64_t>(samples.dim());
  const std::uint64_t count = samples.samples.size();
  os.write(reinterpret_cast<const char*>(&d), sizeof d);
  os.write(reinterpret_cast<const char*>(&count), sizeof count);
  for (const auto& s : samples.samples) {
    os.write(reinterpret_cast<const char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * d));
  }
  if (!os) throw std::runtime_error("write failed for '" + path.string() + "'");
}

SampleSet read_chain_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::uint64_t d = 0, count = 0;
  is.read(reinterpret_cast<char*>(&d), sizeof d);
  is.read(reinterpret_cast<char*>(&count), sizeof count);
  if (!is) throw std::runtime_error("'" + path.string() + "': truncated header");
  SampleSet out;
  out.samples.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    Vector s(static_cast<Index>(d));
    is.read(reinterpret_cast<char*>(s.data()), static_cast<std::streamsize>(sizeof(double) * d));
    if (!is) throw std::runtime_error("'" + path.string() + "': truncated body");
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace bvmlab
