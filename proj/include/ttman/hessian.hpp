#pragma once

#include <functional>

#include "ttman/kernels.hpp"
#include "ttman/tangent.hpp"

namespace ttman {

/// Everything the curvature correction needs for one (X, V, Z) triple.
struct HessianWorkspace {
  BasePtr base;
  /// Cores of V in the first parametrization.
  std::vector<Matrix> dv;
  /// A, B, C families of the ambient tensor Z.
  kernels::Families fam;
  /// G[k] = X~_{>k}^T V_{>k}, k = 0..d-2.
  std::vector<Matrix> G;
  /// Gauged cores of Y^j = P^j(Z): (I - U_j U_j^T) A_j for j < d-1, A_{d-1} last.
  std::vector<Matrix> Y;
};

/// Backward recursion with two running products; O(d n r^3).
std::vector<Matrix> gram_right_tilde_v(const BasePoint& b, const std::vector<Matrix>& dv);

kernels::Families three_products_sparse(const BasePoint& b, const std::vector<Matrix>& dv, const SparseTensor& z);
/// Reference contraction with explicit interface matrices (desk scale).
kernels::Families three_products_dense(const BasePoint& b, const std::vector<Matrix>& dv, const DenseTensor& z);

/// TT-format Z is densified (desk scale only); a structured path is not
/// implemented.
HessianWorkspace make_workspace(const TangentVector& v, const AmbientVector& z);

/// Workspace from precomputed families of Z (cached-interface path).
HessianWorkspace make_workspace(const TangentVector& v, kernels::Families fam);

/// Gauged cores of sum_k P^k D_V P^k Z.
std::vector<Matrix> correction_diagonal(const HessianWorkspace& ws);
/// Gauged cores of sum_{i != j} P^i D_V P^j Z using running sums over j, so
/// the whole pass costs O(d n r^3).
std::vector<Matrix> correction_cross(const HessianWorkspace& ws);

/// Single terms, for verification.
TangentVector diagonal_term(const HessianWorkspace& ws, Index k);
TangentVector cross_term(const HessianWorkspace& ws, Index i, Index j);

/// P_X (D_V P_X) Z.
TangentVector weingarten(const TangentVector& v, const AmbientVector& z);

TangentVector weingarten(const HessianWorkspace& ws);

/// P_X(ehess) + weingarten(V, egrad).
TangentVector hess_apply(const TangentVector& v, const AmbientVector& egrad, const AmbientVector& ehess);

using TangentOp = std::function<TangentVector(const TangentVector&)>;
using GradFn = std::function<TangentVector(const BasePtr&)>;

/// 1e-6 * ||X|| / ||V||.
double default_fd_step(const TangentVector& v);

/// (transport(grad(R_X(hV))) - grad(X)) / h. If g0 is given it is used as
/// grad(X). Sets *underflow when the difference vanishes for nonzero V.
TangentVector fd_hess_apply(const TangentVector& v, const GradFn& grad, double h, const TangentVector* g0 = nullptr,
                            bool* underflow = nullptr);

}  // namespace ttman
