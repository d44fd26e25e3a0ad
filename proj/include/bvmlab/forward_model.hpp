#pragma once

#include "bvmlab/common.hpp"

namespace bvmlab {

/// A differentiable map G: [q_min, q_max]^d -> R^d. Implementations are immutable and
/// safe to evaluate concurrently.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;

  virtual Index dim() const = 0;
  virtual Bounds bounds() const = 0;
  virtual Vector evaluate(const Vector& q) const = 0;
  virtual Matrix jacobian(const Vector& q) const = 0;
};

/// G(q) = A q + b. Used as an exactly-linear reference model in tests and oracles.
class LinearForwardModel final : public ForwardModel {
 public:
  LinearForwardModel(Matrix a, Vector b, Bounds bounds);

  Index dim() const override { return a_.cols(); }
  Bounds bounds() const override { return bounds_; }
  Vector evaluate(const Vector& q) const override;
  Matrix jacobian(const Vector& q) const override;

 private:
  Matrix a_;
  Vector b_;
  Bounds bounds_;
};

}  // namespace bvmlab
