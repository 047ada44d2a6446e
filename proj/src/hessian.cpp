#include "ttman/hessian.hpp"

#include "ttman/detail/core_ops.hpp"

namespace ttman {

using detail::left_gram_step;
using detail::left_multiply_slices;
using detail::project_out;
using detail::right_gram_step;

namespace {

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

Eigen::Map<const Matrix> dense_rows(const DenseTensor& z, Index k) {
  Index rows = 1;
  for (Index j = 0; j <= k; ++j) rows *= z.dims()[u(j)];
  return {z.vec().data(), rows, z.size() / rows};
}

Matrix first_param_y(const HessianWorkspace& ws, Index i) {
  const Index d = ws.base->order();
  return i + 1 < d ? detail::right_solve_upper_transpose(ws.Y[u(i)], ws.base->R(i)) : ws.Y[u(i)];
}

// Contribution to core i coming from a Gram matrix Gamma of extents r_i x r_i
// collected from components j < i.
Matrix lower_cross_core(const HessianWorkspace& ws, Index i, const Matrix& gamma) {
  const BasePoint& b = *ws.base;
  Matrix c = left_multiply_slices(gamma, b.U(i), b.shape().rank(i));
  if (i + 1 < b.order()) c = project_out(b.U(i), c) * b.R(i).transpose();
  return -c;
}

}  // namespace

std::vector<Matrix> gram_right_tilde_v(const BasePoint& b, const std::vector<Matrix>& dv) {
  const Index d = b.order();
  const Shape& s = b.shape();
  std::vector<Matrix> g(u(d - 1));
  const Matrix one = Matrix::Ones(1, 1);
  Matrix p1 = right_gram_step(one, b.Ut(d - 1), s.rank(d - 1), dv[u(d - 1)], s.rank(d - 1));
  Matrix p2 = right_gram_step(one, b.Ut(d - 1), s.rank(d - 1), b.U(d - 1), s.rank(d - 1));
  g[u(d - 2)] = p1;
  for (Index m = d - 2; m >= 1; --m) {
    const Index rl = s.rank(m);
    p1 = right_gram_step(p1, b.Ut(m), rl, b.U(m), rl) + right_gram_step(p2, b.Ut(m), rl, dv[u(m)], rl);
    p2 = right_gram_step(p2, b.Ut(m), rl, b.U(m), rl);
    g[u(m - 1)] = p1;
  }
  return g;
}

kernels::Families three_products_sparse(const BasePoint& b, const std::vector<Matrix>& dv, const SparseTensor& z) {
  if (z.dims() != b.shape().n) throw std::invalid_argument("three_products_sparse: shape mismatch");
  return kernels::three_products(b.x, b.f.cores_tilde, dv, z.omega(), z.values());
}

kernels::Families three_products_dense(const BasePoint& b, const std::vector<Matrix>& dv, const DenseTensor& z) {
  if (z.dims() != b.shape().n) throw std::invalid_argument("three_products_dense: shape mismatch");
  auto base = std::make_shared<BasePoint>(b);
  const VariationalInterfaces vi = variational_interfaces(unchecked_tangent(base, dv, Param::first));
  const TTTensor tilde = tilde_tensor(b.shape(), b.f);
  kernels::Families f;
  for (Index k = 0; k < b.order(); ++k) {
    const Matrix xl = left_interface(b.x, k);
    const Matrix rt = right_interface(tilde, k + 1);
    const auto zk = dense_rows(z, k);
    const Matrix zx = detail::kron_identity_transpose_apply(xl, zk);
    f.A.push_back(zx * rt);
    f.B.push_back(detail::kron_identity_transpose_apply(vi.le[u(k)], zk) * rt);
    f.C.push_back(zx * vi.ge[u(k + 1)]);
  }
  return f;
}

HessianWorkspace make_workspace(const TangentVector& v, const AmbientVector& z) {
  HessianWorkspace ws;
  ws.base = v.base();
  const BasePoint& b = *ws.base;
  ws.dv = to_param(v, Param::first).cores();
  ws.fam = std::visit(
      [&](const auto& t) -> kernels::Families {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, SparseTensor>)
          return three_products_sparse(b, ws.dv, t);
        else if constexpr (std::is_same_v<T, DenseTensor>)
          return three_products_dense(b, ws.dv, t);
        else
          return three_products_dense(b, ws.dv, tt_to_dense(t));
      },
      z);
  ws.G = gram_right_tilde_v(b, ws.dv);
  for (Index j = 0; j < b.order(); ++j) ws.Y.push_back(gauge_core(b, j, ws.fam.A[u(j)]));
  return ws;
}

HessianWorkspace make_workspace(const TangentVector& v, kernels::Families fam) {
  HessianWorkspace ws;
  ws.base = v.base();
  const BasePoint& b = *ws.base;
  ws.dv = to_param(v, Param::first).cores();
  ws.fam = std::move(fam);
  ws.G = gram_right_tilde_v(b, ws.dv);
  for (Index j = 0; j < b.order(); ++j) ws.Y.push_back(gauge_core(b, j, ws.fam.A[u(j)]));
  return ws;
}

std::vector<Matrix> correction_diagonal(const HessianWorkspace& ws) {
  const BasePoint& b = *ws.base;
  const Index d = b.order();
  std::vector<Matrix> out;
  for (Index k = 0; k + 1 < d; ++k) {
    const Matrix& a = ws.fam.A[u(k)];
    Matrix c = project_out(b.U(k), ws.fam.B[u(k)]);
    c -= ws.dv[u(k)] * (b.U(k).transpose() * a);
    c += project_out(b.U(k), detail::right_solve_upper(ws.fam.C[u(k)] - a * ws.G[u(k)], b.R(k)));
    out.push_back(std::move(c));
  }
  out.push_back(ws.fam.B[u(d - 1)]);
  return out;
}

std::vector<Matrix> correction_cross(const HessianWorkspace& ws) {
  const BasePoint& b = *ws.base;
  const Shape& s = b.shape();
  const Index d = b.order();
  std::vector<Matrix> out;
  for (Index k = 0; k < d; ++k) out.push_back(Matrix::Zero(b.U(k).rows(), b.U(k).cols()));

  // components j > i: T_m collects (Y^j_{>=m})^T X~_{>=m} over all j >= m
  Matrix t = Matrix::Zero(1, 1);
  for (Index m = d - 1; m >= 1; --m) {
    const Index rl = s.rank(m);
    const Matrix eye = Matrix::Identity(s.rank(m + 1), s.rank(m + 1));
    t = right_gram_step(eye, ws.Y[u(m)], rl, b.Ut(m), rl) + right_gram_step(t, b.U(m), rl, b.Ut(m), rl);
    out[u(m - 1)] += ws.dv[u(m - 1)] * t;
  }

  // components j < i: Gamma_i collects V_{<i}^T Y^j_{<i} over all j < i
  Matrix gamma = Matrix::Zero(1, 1);
  for (Index i = 0; i < d; ++i) {
    if (i > 0) out[u(i)] += lower_cross_core(ws, i, gamma);
    if (i + 1 < d)
      gamma = left_gram_step(gamma, b.U(i), b.U(i), s.rank(i)) + ws.dv[u(i)].transpose() * first_param_y(ws, i);
  }
  return out;
}

TangentVector diagonal_term(const HessianWorkspace& ws, Index k) {
  std::vector<Matrix> all = correction_diagonal(ws);
  TangentVector z = TangentVector::zero(ws.base);
  std::vector<Matrix> cores = z.cores();
  cores[u(k)] = all[u(k)];
  return unchecked_tangent(ws.base, std::move(cores), Param::gauged);
}

TangentVector cross_term(const HessianWorkspace& ws, Index i, Index j) {
  const BasePoint& b = *ws.base;
  const Shape& s = b.shape();
  const Index d = b.order();
  if (i < 0 || j < 0 || i >= d || j >= d || i == j) throw std::out_of_range("cross_term: need distinct i, j in range");
  std::vector<Matrix> cores = TangentVector::zero(ws.base).cores();
  if (j > i) {
    const Matrix eye = Matrix::Identity(s.rank(j + 1), s.rank(j + 1));
    Matrix t = right_gram_step(eye, ws.Y[u(j)], s.rank(j), b.Ut(j), s.rank(j));
    for (Index m = j - 1; m > i; --m) t = right_gram_step(t, b.U(m), s.rank(m), b.Ut(m), s.rank(m));
    cores[u(i)] = ws.dv[u(i)] * t;
  } else {
    Matrix gamma = ws.dv[u(j)].transpose() * first_param_y(ws, j);
    for (Index m = j + 1; m < i; ++m) gamma = left_gram_step(gamma, b.U(m), b.U(m), s.rank(m));
    cores[u(i)] = lower_cross_core(ws, i, gamma);
  }
  return unchecked_tangent(ws.base, std::move(cores), Param::gauged);
}

TangentVector weingarten(const TangentVector& v, const AmbientVector& z) { return weingarten(make_workspace(v, z)); }

TangentVector weingarten(const HessianWorkspace& ws) {
  std::vector<Matrix> cores = correction_diagonal(ws);
  const std::vector<Matrix> cross = correction_cross(ws);
  for (std::size_t k = 0; k < cores.size(); ++k) cores[k] += cross[k];
  return unchecked_tangent(ws.base, std::move(cores), Param::gauged);
}

TangentVector hess_apply(const TangentVector& v, const AmbientVector& egrad, const AmbientVector& ehess) {
  return project(v.base(), ehess) + weingarten(v, egrad);
}

double default_fd_step(const TangentVector& v) {
  const double nv = tangent_norm(v);
  return nv > 0 ? 1e-6 * v.base()->x.norm() / nv : 1e-6;
}

TangentVector fd_hess_apply(const TangentVector& v, const GradFn& grad, double h, const TangentVector* g0,
                            bool* underflow) {
  if (!(h > 0)) throw std::invalid_argument("fd_hess_apply: step must be positive");
  if (underflow) *underflow = false;
  if (tangent_norm(v) == 0.0) return TangentVector::zero(v.base(), Param::gauged);
  const RetractResult r = retract(v, h);
  if (r.rank_deficient) throw RankDeficiencyError("fd_hess_apply: retraction lost rank");
  const TangentVector gh = grad(make_base_point(r.x));
  TangentVector out = transport(v.base(), gh);
  out -= g0 ? *g0 : grad(v.base());
  out *= 1.0 / h;
  if (underflow && tangent_norm(out) == 0.0 && tangent_norm(v) > 0.0) *underflow = true;
  return out;
}

}  // namespace ttman
