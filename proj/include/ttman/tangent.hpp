#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <memory>
#include <random>
#include <variant>

#include "ttman/sparse.hpp"
#include "ttman/tt.hpp"

namespace ttman {

/// A left-orthogonal point on the manifold together with its
/// right-orthogonalized cores and R factors. Shared read-only by every
/// tangent vector attached to it.
struct BasePoint {
  TTTensor x;
  RightOrthFactors f;

  const Shape& shape() const { return x.shape(); }
  Index order() const { return x.order(); }
  const Matrix& U(Index k) const { return x.core(k); }
  const Matrix& Ut(Index k) const { return f.cores_tilde[static_cast<std::size_t>(k)]; }
  const Matrix& R(Index k) const { return f.R[static_cast<std::size_t>(k)]; }
};

using BasePtr = std::shared_ptr<const BasePoint>;

/// Condition number above which an R factor is considered unusable.
inline constexpr double kMaxRCondition = 1e12;

/// Left-orthogonalizes x if needed and computes the R factors. If some R is
/// worse conditioned than kMaxRCondition the orthogonalization is recomputed
/// once from scratch; if that does not help the point is treated as rank
/// deficient (RankDeficiencyError).
BasePtr make_base_point(const TTTensor& x);

enum class Param { first, gauged };

/// Relative gauge tolerance: ||dV_k^T U_k|| <= tol * ||dV_k|| * ||U_k||.
inline constexpr double kGaugeTol = 1e-8;

class TangentVector {
 public:
  TangentVector() = default;

  const BasePtr& base() const { return base_; }
  Param param() const { return param_; }
  const std::vector<Matrix>& cores() const { return cores_; }
  const Matrix& core(Index k) const { return cores_[static_cast<std::size_t>(k)]; }
  Index order() const { return static_cast<Index>(cores_.size()); }

  static TangentVector zero(BasePtr base, Param p = Param::gauged);

  TangentVector& operator+=(const TangentVector& o);
  TangentVector& operator-=(const TangentVector& o);
  TangentVector& operator*=(double s);
  /// this += a * o
  TangentVector& axpy(double a, const TangentVector& o);

 private:
  friend TangentVector make_tangent(BasePtr, std::vector<Matrix>, Param, bool);
  friend TangentVector unchecked_tangent(BasePtr, std::vector<Matrix>, Param);
  BasePtr base_;
  Param param_ = Param::gauged;
  std::vector<Matrix> cores_;
};

/// Verifies the gauge conditions for k < d-1, or enforces them by projecting
/// dV_k <- (I - U_k U_k^T) dV_k when enforce is set. Throws
/// std::invalid_argument on a violation without enforce.
TangentVector make_tangent(BasePtr base, std::vector<Matrix> cores, Param p, bool enforce = false);

/// No gauge check; for cores that satisfy the gauge by construction.
TangentVector unchecked_tangent(BasePtr base, std::vector<Matrix> cores, Param p);

/// Largest relative gauge residual over k < d-1.
double gauge_residual(const TangentVector& v);

/// I.i.d. normal cores projected onto the gauge (gauged parametrization).
TangentVector random_tangent(const BasePtr& base, std::mt19937_64& rng);

/// Gauged <-> first: dV~_k = dV_k R_k^T for k < d-1, last core unchanged.
TangentVector convert_param(const TangentVector& v);
TangentVector to_param(const TangentVector& v, Param p);

/// Euclidean inner product of the represented tensors: sum_k <dV~_k, dW~_k>.
double tangent_inner(const TangentVector& v, const TangentVector& w);
inline double tangent_norm(const TangentVector& v) { return std::sqrt(std::max(0.0, tangent_inner(v, v))); }

TangentVector operator+(TangentVector a, const TangentVector& b);
TangentVector operator-(TangentVector a, const TangentVector& b);
TangentVector operator*(double s, TangentVector a);

/// Explicit variational interface matrices (desk scale). le[m] is the
/// derivative of left_interface(x, m), m = 0..d; ge[m] the derivative of
/// right_interface(x, m), m = 0..d. le[0] and ge[d] are the 1x1 zero.
struct VariationalInterfaces {
  std::vector<Matrix> le;
  std::vector<Matrix> ge;
};

VariationalInterfaces variational_interfaces(const TangentVector& v);

/// Ambient tensors the projection and Weingarten map accept.
using AmbientVector = std::variant<DenseTensor, SparseTensor, TTTensor>;

TangentVector project_dense(const BasePtr& base, const DenseTensor& z);
TangentVector project_sparse(const BasePtr& base, const SparseTensor& z);
/// Projection of a TT-format tensor through Gram sequences; never densifies.
TangentVector project_tt(const BasePtr& base, const TTTensor& z);
TangentVector project(const BasePtr& base, const AmbientVector& z);

/// Single split component P^k(Z) (only gauged core k nonzero), dense input.
TangentVector project_dense_component(const BasePtr& base, const DenseTensor& z, Index k);

/// Gauged core of the projection computed from the unprojected A_k.
Matrix gauge_core(const BasePoint& b, Index k, const Matrix& a);

/// Block TT of interior ranks 2r representing the tangent vector.
TTTensor tangent_to_tt(const TangentVector& v);
DenseTensor densify(const TangentVector& v);

/// Values of the tangent vector on an index set, O(d |Omega| r^2).
std::vector<double> tangent_entries(const TangentVector& v, const IndexSet& omega);

struct RetractResult {
  TTTensor x;
  bool rank_deficient = false;
};

/// Rounds X + t V back to the ranks of X, keeping the rank fixed and
/// reporting deficiency instead of shrinking. t = 0 returns X unchanged.
RetractResult retract(const TangentVector& v, double t);

/// Projection of V (at its own base) onto the tangent space at new_base.
TangentVector transport(const BasePtr& new_base, const TangentVector& v);

/// Gauged cores serialized as magic "TTV1", u8 param, then the cores as f64
/// in storage order. The base point travels separately as a TTZ1 file.
void write_tangent(std::ostream& os, const TangentVector& v);
TangentVector read_tangent(std::istream& is, BasePtr base);

}  // namespace ttman
