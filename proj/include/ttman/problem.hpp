#pragma once

#include <optional>

#include "ttman/hessian.hpp"

namespace ttman {

/// A smooth function on the ambient space, restricted to the manifold.
/// Implementations must allow concurrent const use.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual const Extents& dims() const = 0;
  virtual double cost(const BasePoint& x) const = 0;
  /// Euclidean gradient at x.
  virtual AmbientVector egrad(const BasePoint& x) const = 0;
  /// Euclidean Hessian at x applied to the tangent vector v.
  virtual AmbientVector ehess(const BasePoint& x, const TangentVector& v) const = 0;
  virtual std::optional<double> test_cost(const BasePoint&) const { return std::nullopt; }

  /// Riemannian gradient P_X(egrad).
  TangentVector rgrad(const BasePtr& x) const { return project(x, egrad(*x)); }
  /// Riemannian Hessian applied to v, reusing a precomputed egrad.
  TangentVector rhess(const TangentVector& v, const AmbientVector& eg) const {
    return hess_apply(v, eg, ehess(*v.base(), v));
  }

  /// Riemannian Hessian at x for repeated application (tCG, Lanczos).
  /// Implementations may cache point-dependent data in the closure; the
  /// default calls rhess.
  virtual TangentOp hessian_operator(const BasePtr& x, const AmbientVector& eg) const {
    return [this, x, eg](const TangentVector& v) {
      if (v.base() != x) throw std::invalid_argument("hessian_operator: tangent vector at a different point");
      return rhess(v, eg);
    };
  }
};

}  // namespace ttman
