#pragma once

#include <cstdint>
#include <optional>

#include "ttman/dense.hpp"
#include "ttman/types.hpp"

namespace ttman {

/// Mode sizes n[0..d-1] and ranks r[0..d] with r[0] = r[d] = 1.
struct Shape {
  Extents n;
  Extents r;

  Shape() = default;
  Shape(Extents modes, Extents ranks);

  /// Builds a shape from mode sizes and the d-1 interior ranks.
  static Shape from_interior(Extents modes, const Extents& interior);
  static Shape uniform(Index d, Index n, Index rank);
  /// Like uniform, with rank k capped at min(n^k, n^(d-k)) so the shape is
  /// feasible near the boundary cores.
  static Shape uniform_capped(Index d, Index n, Index rank);

  Index order() const { return static_cast<Index>(n.size()); }
  Index mode(Index k) const { return n[static_cast<std::size_t>(k)]; }
  Index rank(Index k) const { return r[static_cast<std::size_t>(k)]; }
  Extents interior_ranks() const { return {r.begin() + 1, r.end() - 1}; }

  /// r[k-1] <= n[k] r[k] and r[k] <= n[k] r[k-1] for every core.
  bool feasible() const;
  /// Throws std::invalid_argument unless the shape describes a non-empty
  /// fixed-rank manifold.
  void require_feasible() const;

  /// sum_k r[k] n[k] r[k+1] - sum_{k=1}^{d-1} r[k]^2
  Index manifold_dim() const;
  /// Number of entries of the full tensor, saturating.
  Index num_entries() const { return checked_product(n); }

  friend bool operator==(const Shape&, const Shape&) = default;
};

enum class Orth { none, left, right, mu };

/// A tensor in TT format. Core k is stored as its left flattening
/// U_k^L in R^{(r[k] n[k]) x r[k+1]}, column-major, with row index
/// a + r[k] * i. The same buffer read as an r[k] x (n[k] r[k+1]) column-major
/// matrix is the right flattening U_k^R. Slice U_k(i) is the row block
/// [i r[k], (i+1) r[k]).
class TTTensor {
 public:
  TTTensor() = default;
  TTTensor(Shape shape, std::vector<Matrix> cores, Orth orth = Orth::none, Index center = -1);

  /// Cores filled with zeros.
  static TTTensor zeros(const Shape& shape);

  const Shape& shape() const { return shape_; }
  Index order() const { return shape_.order(); }
  Orth orth() const { return orth_; }
  /// Orthogonality center (meaningful for Orth::mu; d-1 for left, 0 for right).
  Index center() const { return center_; }

  const Matrix& core(Index k) const { return cores_[static_cast<std::size_t>(k)]; }
  const std::vector<Matrix>& cores() const { return cores_; }

  /// Right flattening view of core k.
  Eigen::Map<const Matrix> core_right(Index k) const;

  auto slice(Index k, Index i) const {
    const Index rl = shape_.rank(k);
    return core(k).middleRows(i * rl, rl);
  }

  /// Frobenius norm of the full tensor via the left Gram sequence.
  double norm() const;

 private:
  Shape shape_;
  std::vector<Matrix> cores_;
  Orth orth_ = Orth::none;
  Index center_ = -1;
};

/// Evaluate X(i_0, ..., i_{d-1}) as a product of slice matrices.
double tt_entry(const TTTensor& x, std::span<const Index> idx);

/// Dense materialization, subject to the desk cap.
DenseTensor tt_to_dense(const TTTensor& x);

/// Explicit left interface matrix X_{<=m} (product of the first m cores),
/// of extents (n_0 ... n_{m-1}) x r[m]; m = 0 gives the 1x1 matrix [1].
Matrix left_interface(const TTTensor& x, Index m);
/// Explicit right interface matrix of cores m..d-1 in the tall convention,
/// extents (n_m ... n_{d-1}) x r[m]; m = d gives [1].
Matrix right_interface(const TTTensor& x, Index m);

struct TruncationTarget {
  /// Interior ranks (d-1 entries); requests above the numerical rank of a
  /// flattening are clipped.
  std::optional<Extents> ranks;
  /// Relative Frobenius accuracy.
  std::optional<double> rel_tol;
};

/// Sequential-SVD decomposition. Output is left-orthogonal.
TTTensor tt_svd(const DenseTensor& t, const TruncationTarget& target = {});

/// Numerical TT-rank: singular values below max(rows, cols) * eps * sigma_max
/// count as zero.
Extents tt_rank(const DenseTensor& t);

/// Cores 0..mu-1 left-orthogonal, mu+1..d-1 right-orthogonal. Throws
/// RankDeficiencyError when a core flattening is numerically rank deficient.
TTTensor mu_orthogonalize(const TTTensor& x, Index mu);
inline TTTensor left_orthogonalize(const TTTensor& x) { return mu_orthogonalize(x, x.order() - 1); }
inline TTTensor right_orthogonalize(const TTTensor& x) { return mu_orthogonalize(x, 0); }

/// Right-orthogonalized cores of a left-orthogonal tensor together with the
/// upper-triangular factors linking the two sets of right interfaces:
/// right_interface(x, k+1) = right_interface(tilde, k+1) * R[k], k = 0..d-2.
struct RightOrthFactors {
  std::vector<Matrix> cores_tilde;
  std::vector<Matrix> R;
};

RightOrthFactors right_orthogonalize_with_R(const TTTensor& x);

/// TT built from cores_tilde (right-orthogonal).
TTTensor tilde_tensor(const Shape& shape, const RightOrthFactors& f);

struct InnerProduct {
  double value = 0.0;
  /// left[m] = X_{<=m}^T Y_{<=m}, m = 0..d (left[0] = [1]).
  std::vector<Matrix> left;
  /// right[m] = X_{>=m}^T Y_{>=m} over cores m..d-1, m = 0..d (right[d] = [1]).
  std::vector<Matrix> right;
};

InnerProduct tt_inner(const TTTensor& x, const TTTensor& y);
inline double tt_dot(const TTTensor& x, const TTTensor& y) { return tt_inner(x, y).value; }

/// Block-diagonal sum; interior ranks add. Not rounded.
TTTensor tt_add(const TTTensor& x, const TTTensor& y);
TTTensor tt_scale(const TTTensor& x, double s);

struct RoundResult {
  TTTensor tensor;
  /// True when a kept singular value fell below the numerical-rank cutoff.
  bool rank_deficient = false;
};

/// Truncate to at most `ranks` (interior), clipping to numerical rank.
/// Output is left-orthogonal.
TTTensor tt_round(const TTTensor& x, const Extents& ranks);
/// Truncate to exactly `ranks`, reporting rank deficiency instead of
/// shrinking.
RoundResult tt_round_exact(const TTTensor& x, const Extents& ranks);

/// I.i.d. standard normal cores, then left-orthogonalized.
TTTensor random_tt(const Shape& shape, std::uint64_t seed);

}  // namespace ttman
