#pragma once

#include <Eigen/Dense>

#include "hpeel/rng.hpp"

namespace hpeel {

/// Black-box handle on an N x N operator: all access goes through products
/// with tall-skinny blocks. Implementations must satisfy the adjoint
/// consistency probe <Ax, y> = <x, A^T y> to about 1e-10 relative.
class LinearOperator {
 public:
  virtual ~LinearOperator() = default;

  virtual Eigen::Index rows() const = 0;
  virtual Eigen::Index cols() const = 0;

  virtual Matrix apply(const Matrix& x) const = 0;
  virtual Matrix apply_adjoint(const Matrix& x) const = 0;

  /// Whether concurrent apply calls are safe.
  virtual bool reentrant() const { return true; }
};

}  // namespace hpeel
