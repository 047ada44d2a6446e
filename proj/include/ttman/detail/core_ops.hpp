#pragma once

// Small dense building blocks shared by the TT, tangent and Hessian code.
// A "core" here is always a left flattening with rl*n rows; rl is passed
// explicitly because the matrix alone does not know it.

#include <Eigen/Dense>

#include "ttman/types.hpp"

namespace ttman::detail {

inline Eigen::Map<const Matrix> as_right(const Matrix& core, Index rl) {
  return {core.data(), rl, core.size() / rl};
}

/// (I_n (x) M) C: every slice C(i) replaced by M C(i). M is m x rl.
inline Matrix left_multiply_slices(const Matrix& m, const Matrix& core, Index rl) {
  const Index n = core.rows() / rl;
  Matrix prod = m * as_right(core, rl);
  return Eigen::Map<const Matrix>(prod.data(), m.rows() * n, core.cols());
}

/// sum_i A(i)^T M B(i), with M of extents ra x rb.
inline Matrix left_gram_step(const Matrix& m, const Matrix& a, const Matrix& b, Index rb) {
  return a.transpose() * left_multiply_slices(m, b, rb);
}

/// sum_i A(i) M B(i)^T, with M of extents A.cols() x B.cols().
inline Matrix right_gram_step(const Matrix& m, const Matrix& a, Index ra, const Matrix& b, Index rb) {
  const Index n = a.rows() / ra;
  Matrix am = a * m;
  return Eigen::Map<const Matrix>(am.data(), ra, n * m.cols()) * as_right(b, rb).transpose();
}

/// (I - U U^T) M for U with orthonormal columns; exactly zero when U is
/// square.
inline Matrix project_out(const Matrix& u, const Matrix& m) {
  if (u.rows() == u.cols()) return Matrix::Zero(m.rows(), m.cols());
  return m - u * (u.transpose() * m);
}

struct ThinQR {
  Matrix q;
  Matrix r;
};

/// Householder QR normalized to a nonnegative diagonal of R, which makes the
/// factorization unique and continuous for full-rank input.
inline ThinQR thin_qr(const Matrix& a) {
  const Index k = std::min(a.rows(), a.cols());
  Eigen::HouseholderQR<Matrix> qr(a);
  ThinQR out;
  out.q = qr.householderQ() * Matrix::Identity(a.rows(), k);
  out.r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  for (Index i = 0; i < k; ++i) {
    if (out.r(i, i) < 0) {
      out.r.row(i) *= -1.0;
      out.q.col(i) *= -1.0;
    }
  }
  return out;
}

/// min_i |R_ii| <= tol * max_i |R_ii| with tol = max(rows, cols) * eps.
inline bool triangular_rank_deficient(const Matrix& r, Index rows, Index cols) {
  if (r.rows() == 0) return false;
  const Vector diag = r.diagonal().cwiseAbs();
  const double tol = static_cast<double>(std::max(rows, cols)) * Eigen::NumTraits<double>::epsilon();
  return diag.minCoeff() <= tol * diag.maxCoeff() || diag.maxCoeff() == 0.0;
}

/// M R^{-1} for upper-triangular R.
inline Matrix right_solve_upper(const Matrix& m, const Matrix& r) {
  return r.transpose().triangularView<Eigen::Lower>().solve(m.transpose()).transpose();
}

/// M R^{-T} for upper-triangular R.
inline Matrix right_solve_upper_transpose(const Matrix& m, const Matrix& r) {
  return r.triangularView<Eigen::Upper>().solve(m.transpose()).transpose();
}

/// (I_n (x) L)^T M where L has nl rows and M has n*nl rows.
inline Matrix kron_identity_transpose_apply(const Matrix& l, const Matrix& m) {
  const Index nl = l.rows();
  const Index n = m.rows() / nl;
  Matrix out(l.cols() * n, m.cols());
  for (Index i = 0; i < n; ++i) out.middleRows(i * l.cols(), l.cols()) = l.transpose() * m.middleRows(i * nl, nl);
  return out;
}

/// (I_n (x) L) C where L has nl rows and C has n*L.cols() rows.
inline Matrix kron_identity_apply(const Matrix& l, const Matrix& c) {
  const Index rl = l.cols();
  const Index n = c.rows() / rl;
  Matrix out(l.rows() * n, c.cols());
  for (Index i = 0; i < n; ++i) out.middleRows(i * l.rows(), l.rows()) = l * c.middleRows(i * rl, rl);
  return out;
}

}  // namespace ttman::detail
