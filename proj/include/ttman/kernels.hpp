#pragma once

// Sparse kernels over an observed index set. The default namespace holds the
// OpenMP versions; kernels::serial holds the straightforward reference loops
// they are tested and benchmarked against.
//
// The parallel versions split Omega into a fixed number of contiguous chunks
// that does not depend on the thread count and add the per-chunk partial sums
// in chunk order, so results are identical for any OMP_NUM_THREADS.

#include <span>

#include "ttman/sparse.hpp"
#include "ttman/tt.hpp"

namespace ttman::kernels {

/// A_k = (I (x) X_{<k})^T Z^{<k>} X~_{>k},
/// B_k = (I (x) V_{<k})^T Z^{<k>} X~_{>k},
/// C_k = (I (x) X_{<k})^T Z^{<k>} V_{>k}, each of extents (r[k] n[k]) x r[k+1].
struct Families {
  std::vector<Matrix> A, B, C;
};

/// X(i) for every i in Omega.
std::vector<double> entries(const TTTensor& x, const IndexSet& omega);

/// Entries of the tangent vector sum_k X_{<k} dV_k X_{>k} on Omega, with dV in
/// the first parametrization at the left-orthogonal point x.
std::vector<double> tangent_entries(const TTTensor& x, const std::vector<Matrix>& dv, const IndexSet& omega);

/// A family only (what the tangent projection needs). tilde are the
/// right-orthogonal cores of x.
std::vector<Matrix> a_family(const TTTensor& x, const std::vector<Matrix>& tilde, const IndexSet& omega,
                             std::span<const double> z);

/// All three families in one pass over Omega.
Families three_products(const TTTensor& x, const std::vector<Matrix>& tilde, const std::vector<Matrix>& dv,
                        const IndexSet& omega, std::span<const double> z);

/// Per-sample interface vectors of a left-orthogonal point, reused by every
/// Hessian application at that point. For sample t and position k = 0..d:
/// left(t, k) = X_{<k}(i)^T (length r[k]), right(t, k) = X_{>=k}(i) and
/// tilde(t, k) = X~_{>=k}(i) (length r[k]). Memory 3 (d+1) |Omega| max(r).
struct SampleInterfaces {
  Index d = 0;
  Index stride = 0;
  std::vector<double> left, right, tilde;

  const double* l(Index t, Index k) const { return left.data() + (t * (d + 1) + k) * stride; }
  const double* rho(Index t, Index k) const { return right.data() + (t * (d + 1) + k) * stride; }
  const double* rhot(Index t, Index k) const { return tilde.data() + (t * (d + 1) + k) * stride; }
};

SampleInterfaces sample_interfaces(const TTTensor& x, const std::vector<Matrix>& tilde, const IndexSet& omega);

/// A family from cached interfaces.
std::vector<Matrix> a_family(const TTTensor& x, const SampleInterfaces& si, const IndexSet& omega,
                             std::span<const double> z);

/// Families for one completion Hessian application in a single pass: with
/// e_t = V(i_t), Ae is the A family of e (the projected Euclidean Hessian),
/// B and C those of the gradient values zg.
struct CompletionFamilies {
  std::vector<Matrix> Ae, B, C;
};

CompletionFamilies completion_families(const TTTensor& x, const SampleInterfaces& si, const std::vector<Matrix>& dv,
                                       const IndexSet& omega, std::span<const double> zg);

/// Number of chunks used for a given |Omega|.
Index chunk_count(Index nnz);

namespace serial {

std::vector<double> entries(const TTTensor& x, const IndexSet& omega);
std::vector<double> tangent_entries(const TTTensor& x, const std::vector<Matrix>& dv, const IndexSet& omega);
std::vector<Matrix> a_family(const TTTensor& x, const std::vector<Matrix>& tilde, const IndexSet& omega,
                             std::span<const double> z);
Families three_products(const TTTensor& x, const std::vector<Matrix>& tilde, const std::vector<Matrix>& dv,
                        const IndexSet& omega, std::span<const double> z);

}  // namespace serial

}  // namespace ttman::kernels
