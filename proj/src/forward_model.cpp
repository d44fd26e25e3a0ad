#include "bvmlab/forward_model.hpp"

#include <utility>

namespace bvmlab {

LinearForwardModel::LinearForwardModel(Matrix a, Vector b, Bounds bounds)
    : a_(std::move(a)), b_(std::move(b)), bounds_(bounds) {
  if (a_.rows() != a_.cols() || b_.size() != a_.rows()) {
    throw DimensionError("LinearForwardModel: A must be square and match b");
  }
}

Vector LinearForwardModel::evaluate(const Vector& q) const {
  if (q.size() != dim()) throw DimensionError("LinearForwardModel: wrong parameter length");
  return a_ * q + b_;
}

Matrix LinearForwardModel::jacobian(const Vector& q) const {
  if (q.size() != dim()) throw DimensionError("LinearForwardModel: wrong parameter length");
  return a_;
}

}  // namespace bvmlab
