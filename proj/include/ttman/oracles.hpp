#pragma once

// Finite-difference references for the differential identities. Desk scale
// only: everything here densifies.

#include <functional>

#include "ttman/tangent.hpp"

namespace ttman::oracle {

inline constexpr double kStep = 1e-5;

/// Cores U_k + t dV_k (first parametrization), not orthogonalized. Its
/// derivative at t = 0 is V.
TTTensor curve_raw(const TangentVector& v, double t);

/// The same curve point, left-orthogonalized with R factors.
BasePtr curve_point(const TangentVector& v, double t);

/// Central difference of a dense-valued function of the curve point.
DenseTensor central_difference(const TangentVector& v, const std::function<DenseTensor(const BasePtr&)>& f,
                               double h = kStep);

/// Central difference of a matrix-valued function of the raw curve.
Matrix central_difference_raw(const TangentVector& v, const std::function<Matrix(const TTTensor&)>& f,
                              double h = kStep);

/// d/dt P_{c(t)}(Z) at t = 0.
DenseTensor projector_derivative(const TangentVector& v, const DenseTensor& z, double h = kStep);

/// d/dt P^k_{c(t)}(Z) at t = 0.
DenseTensor component_derivative(const TangentVector& v, const DenseTensor& z, Index k, double h = kStep);

/// Matrix of P_X on the full ambient space, column j = vec(P_X(e_j)).
Matrix assemble_projector(const BasePtr& base);

/// Relative Frobenius distance ||a - b|| / max(||b||, floor).
double rel_error(const DenseTensor& a, const DenseTensor& b, double floor = 1e-300);

}  // namespace ttman::oracle
