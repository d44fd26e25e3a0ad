#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>

namespace bvmlab {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// A parameter left the admissible box [q_min, q_max]^d.
class BoundsError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Shapes of vectors/matrices do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Something that should be impossible for valid input (failed factorization, SVD, ...).
class InternalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The box [q_min, q_max] applied to every component.
struct Bounds {
  double q_min = 0.1;
  double q_max = 10.0;

  bool contains(double v) const { return v >= q_min && v <= q_max; }
  bool contains(const Vector& q) const {
    for (Index k = 0; k < q.size(); ++k) {
      if (!contains(q[k])) return false;
    }
    return true;
  }
  bool strictly_contains(const Vector& q) const {
    for (Index k = 0; k < q.size(); ++k) {
      if (!(q[k] > q_min && q[k] < q_max)) return false;
    }
    return true;
  }
  double width() const { return q_max - q_min; }
};

/// splitmix64 step; used to derive independent stream seeds from a base seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// Worker count: BVM_LAB_THREADS if set and positive, else hardware concurrency.
unsigned worker_threads();

/// Runs body(i) for i in [0, count) on worker_threads() threads. The first exception is rethrown.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

Vector standard_normal_vector(Index d, Rng& rng);

void warn(const std::string& message);

}  // namespace bvmlab
