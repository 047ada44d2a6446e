#pragma once

#include <cstdint>
#include <functional>

#include "ttman/problem.hpp"

namespace ttman {

/// Orthonormal basis of the tangent space in the gauged parametrization:
/// for k < d-1 the cores q e_b^T with q ranging over an orthonormal
/// complement of range(U_k), for the last core all unit cores. Its size is
/// the manifold dimension.
std::vector<TangentVector> tangent_basis(const BasePtr& base);

/// Matrix of a linear tangent-space operator in tangent_basis (desk scale).
Matrix assemble_operator(const BasePtr& base, const TangentOp& op);

struct ConditionOptions {
  /// Lanczos steps; 0 means min(manifold dimension, 4000).
  Index max_iter = 0;
  /// Ritz residual tolerance relative to |lambda|.
  double tol = 1e-8;
  std::uint64_t seed = 0;
  /// Eigenvalues at or below null_rel * lambda_max are excluded from the
  /// positive spectrum.
  double null_rel = 1e-10;
};

struct ConditionEstimate {
  double lambda_max = 0.0;
  /// Smallest eigenvalue overall (may be zero or negative).
  double lambda_min = 0.0;
  double lambda_min_pos = 0.0;
  double kappa = 0.0;
  Index iterations = 0;
  bool converged = false;
  double residual_max = 0.0;
  double residual_min_pos = 0.0;
};

/// Lanczos with full reorthogonalization on the tangent space.
ConditionEstimate lanczos_condition(const BasePtr& base, const TangentOp& op, const ConditionOptions& opt = {});

/// Extreme eigenvalues of the Riemannian Hessian of `problem` at x.
ConditionEstimate condition_estimate(const Problem& problem, const BasePtr& x, const ConditionOptions& opt = {});

/// Same quantities from a dense symmetric matrix (reference path).
ConditionEstimate dense_condition(const Matrix& h, double null_rel = 1e-10);

}  // namespace ttman
