#include "ttman/tangent.hpp"

#include <istream>
#include <ostream>

#include <Eigen/SVD>

#include "ttman/binary_io.hpp"
#include "ttman/detail/core_ops.hpp"
#include "ttman/kernels.hpp"

namespace ttman {

namespace {

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

double max_condition(const std::vector<Matrix>& rs) {
  double worst = 1.0;
  for (const Matrix& r : rs) {
    Eigen::JacobiSVD<Matrix> svd(r);
    const Vector& sv = svd.singularValues();
    const double c = sv(sv.size() - 1) > 0 ? sv(0) / sv(sv.size() - 1) : std::numeric_limits<double>::infinity();
    worst = std::max(worst, c);
  }
  return worst;
}

void require_same_base(const TangentVector& a, const TangentVector& b) {
  if (a.base() != b.base()) throw std::invalid_argument("tangent vectors live at different base points");
}

void check_core_shapes(const BasePoint& b, const std::vector<Matrix>& cores) {
  if (static_cast<Index>(cores.size()) != b.order()) throw std::invalid_argument("tangent: wrong number of cores");
  for (Index k = 0; k < b.order(); ++k)
    if (cores[u(k)].rows() != b.U(k).rows() || cores[u(k)].cols() != b.U(k).cols())
      throw std::invalid_argument("tangent: core " + std::to_string(k) + " has wrong extents");
}

// Tall right interface extended by one core on the left.
Matrix right_extend(const Matrix& core, Index rl, const Matrix& next) {
  const Index n = core.rows() / rl;
  Matrix out(n * next.rows(), rl);
  for (Index i = 0; i < n; ++i) {
    Matrix block = next * core.middleRows(i * rl, rl).transpose();
    for (Index q = 0; q < next.rows(); ++q) out.row(i + n * q) = block.row(q);
  }
  return out;
}

// Rows of the (k+1)-th flattening of a dense tensor (all of it for k = d-1).
Eigen::Map<const Matrix> dense_rows(const DenseTensor& z, Index k) {
  Index rows = 1;
  for (Index j = 0; j <= k; ++j) rows *= z.dims()[u(j)];
  return {z.vec().data(), rows, z.size() / rows};
}

Matrix dense_a(const BasePoint& b, const TTTensor& tilde, const DenseTensor& z, Index k) {
  Matrix l = left_interface(b.x, k);
  Matrix rt = right_interface(tilde, k + 1);
  return detail::kron_identity_transpose_apply(l, dense_rows(z, k)) * rt;
}

// Block TT representing sum_k X_{<k} D_k W_{>k}, where W are `right` cores
// and D the variational cores; `last_extra` (if nonempty) is added to the
// last variational core and pairs with the pure-U state, i.e. represents X.
TTTensor block_tt(const BasePoint& b, const std::vector<Matrix>& right, const std::vector<Matrix>& var,
                  const Matrix* last_extra) {
  const Shape& s = b.shape();
  const Index d = s.order();
  Extents r(u(d + 1), 1);
  for (Index k = 1; k < d; ++k) r[u(k)] = 2 * s.rank(k);
  std::vector<Matrix> cores;
  for (Index k = 0; k < d; ++k) {
    const Index n = s.mode(k), rl = s.rank(k), rr = s.rank(k + 1);
    Matrix c = Matrix::Zero(r[u(k)] * n, r[u(k + 1)]);
    for (Index i = 0; i < n; ++i) {
      auto blk = c.middleRows(i * r[u(k)], r[u(k)]);
      auto dv = var[u(k)].middleRows(i * rl, rl);
      if (k == 0) {
        blk.leftCols(rr) = dv;
        blk.rightCols(rr) = b.x.slice(k, i);
      } else if (k == d - 1) {
        blk.topRows(rl) = right[u(k)].middleRows(i * rl, rl);
        blk.bottomRows(rl) = dv;
        if (last_extra) blk.bottomRows(rl) += last_extra->middleRows(i * rl, rl);
      } else {
        blk.topLeftCorner(rl, rr) = right[u(k)].middleRows(i * rl, rl);
        blk.bottomLeftCorner(rl, rr) = dv;
        blk.bottomRightCorner(rl, rr) = b.x.slice(k, i);
      }
    }
    cores.push_back(std::move(c));
  }
  return TTTensor(Shape(s.n, r), std::move(cores));
}

}  // namespace

BasePtr make_base_point(const TTTensor& x) {
  x.shape().require_feasible();
  auto build = [](TTTensor y) {
    auto b = std::make_shared<BasePoint>();
    b->f = right_orthogonalize_with_R(y);
    b->x = std::move(y);
    return b;
  };
  TTTensor y = x.orth() == Orth::left ? x : left_orthogonalize(x);
  auto b = build(y);
  if (max_condition(b->f.R) > kMaxRCondition) {
    b = build(left_orthogonalize(TTTensor(y.shape(), y.cores())));
    if (max_condition(b->f.R) > kMaxRCondition)
      throw RankDeficiencyError("make_base_point: R factor condition number exceeds 1e12");
  }
  return b;
}

TangentVector unchecked_tangent(BasePtr base, std::vector<Matrix> cores, Param p) {
  if (!base) throw std::invalid_argument("tangent: null base point");
  check_core_shapes(*base, cores);
  TangentVector v;
  v.base_ = std::move(base);
  v.param_ = p;
  v.cores_ = std::move(cores);
  return v;
}

TangentVector make_tangent(BasePtr base, std::vector<Matrix> cores, Param p, bool enforce) {
  TangentVector v = unchecked_tangent(std::move(base), std::move(cores), p);
  const BasePoint& b = *v.base_;
  for (Index k = 0; k + 1 < b.order(); ++k) {
    Matrix& c = v.cores_[u(k)];
    if (enforce) {
      c = detail::project_out(b.U(k), c);
    } else {
      const double res = (c.transpose() * b.U(k)).norm();
      if (res > kGaugeTol * c.norm() * b.U(k).norm())
        throw std::invalid_argument("make_tangent: gauge condition violated at core " + std::to_string(k));
    }
  }
  return v;
}

TangentVector TangentVector::zero(BasePtr base, Param p) {
  std::vector<Matrix> cores;
  for (Index k = 0; k < base->order(); ++k) cores.push_back(Matrix::Zero(base->U(k).rows(), base->U(k).cols()));
  return unchecked_tangent(std::move(base), std::move(cores), p);
}

TangentVector random_tangent(const BasePtr& base, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  std::vector<Matrix> cores;
  for (const Matrix& c : base->x.cores()) {
    Matrix m(c.rows(), c.cols());
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    cores.push_back(std::move(m));
  }
  return make_tangent(base, std::move(cores), Param::gauged, true);
}

double gauge_residual(const TangentVector& v) {
  const BasePoint& b = *v.base();
  double worst = 0.0;
  for (Index k = 0; k + 1 < b.order(); ++k) {
    const double scale = v.core(k).norm() * b.U(k).norm();
    if (scale == 0.0) continue;
    worst = std::max(worst, (v.core(k).transpose() * b.U(k)).norm() / scale);
  }
  return worst;
}

TangentVector convert_param(const TangentVector& v) {
  const BasePoint& b = *v.base();
  std::vector<Matrix> cores = v.cores();
  for (Index k = 0; k + 1 < b.order(); ++k) {
    if (v.param() == Param::first)
      cores[u(k)] = cores[u(k)] * b.R(k).transpose();
    else
      cores[u(k)] = detail::right_solve_upper_transpose(cores[u(k)], b.R(k));
  }
  return unchecked_tangent(v.base(), std::move(cores), v.param() == Param::first ? Param::gauged : Param::first);
}

TangentVector to_param(const TangentVector& v, Param p) { return v.param() == p ? v : convert_param(v); }

TangentVector& TangentVector::axpy(double a, const TangentVector& o) {
  require_same_base(*this, o);
  const TangentVector& w = o.param_ == param_ ? o : convert_param(o);
  for (std::size_t k = 0; k < cores_.size(); ++k) cores_[k] += a * w.cores_[k];
  return *this;
}

TangentVector& TangentVector::operator+=(const TangentVector& o) { return axpy(1.0, o); }
TangentVector& TangentVector::operator-=(const TangentVector& o) { return axpy(-1.0, o); }

TangentVector& TangentVector::operator*=(double s) {
  for (auto& c : cores_) c *= s;
  return *this;
}

TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
TangentVector operator*(double s, TangentVector a) { return a *= s; }

double tangent_inner(const TangentVector& v, const TangentVector& w) {
  require_same_base(v, w);
  const TangentVector& a = v.param() == Param::gauged ? v : convert_param(v);
  const TangentVector& c = w.param() == Param::gauged ? w : convert_param(w);
  double s = 0.0;
  for (Index k = 0; k < a.order(); ++k) s += a.core(k).cwiseProduct(c.core(k)).sum();
  return s;
}

VariationalInterfaces variational_interfaces(const TangentVector& v0) {
  const TangentVector v = to_param(v0, Param::first);
  const BasePoint& b = *v.base();
  const Index d = b.order();
  VariationalInterfaces vi;
  vi.le.assign(u(d + 1), Matrix::Zero(1, 1));
  vi.ge.assign(u(d + 1), Matrix::Zero(1, 1));
  Matrix xl = Matrix::Ones(1, 1);
  for (Index k = 0; k < d; ++k) {
    vi.le[u(k + 1)] = detail::kron_identity_apply(vi.le[u(k)], b.U(k)) + detail::kron_identity_apply(xl, v.core(k));
    xl = detail::kron_identity_apply(xl, b.U(k));
  }
  Matrix xr = Matrix::Ones(1, 1);
  for (Index k = d - 1; k >= 0; --k) {
    const Index rl = b.shape().rank(k);
    vi.ge[u(k)] = right_extend(b.U(k), rl, vi.ge[u(k + 1)]) + right_extend(v.core(k), rl, xr);
    xr = right_extend(b.U(k), rl, xr);
  }
  return vi;
}

Matrix gauge_core(const BasePoint& b, Index k, const Matrix& a) {
  return k + 1 < b.order() ? detail::project_out(b.U(k), a) : a;
}

TangentVector project_dense(const BasePtr& base, const DenseTensor& z) {
  const BasePoint& b = *base;
  if (z.dims() != b.shape().n) throw std::invalid_argument("project_dense: shape mismatch");
  const TTTensor tilde = tilde_tensor(b.shape(), b.f);
  std::vector<Matrix> cores;
  for (Index k = 0; k < b.order(); ++k) cores.push_back(gauge_core(b, k, dense_a(b, tilde, z, k)));
  return unchecked_tangent(base, std::move(cores), Param::gauged);
}

TangentVector project_dense_component(const BasePtr& base, const DenseTensor& z, Index k) {
  const BasePoint& b = *base;
  if (z.dims() != b.shape().n) throw std::invalid_argument("project_dense_component: shape mismatch");
  if (k < 0 || k >= b.order()) throw std::out_of_range("project_dense_component: bad component");
  TangentVector v = TangentVector::zero(base);
  std::vector<Matrix> cores = v.cores();
  cores[u(k)] = gauge_core(b, k, dense_a(b, tilde_tensor(b.shape(), b.f), z, k));
  return unchecked_tangent(base, std::move(cores), Param::gauged);
}

TangentVector project_sparse(const BasePtr& base, const SparseTensor& z) {
  const BasePoint& b = *base;
  if (z.dims() != b.shape().n) throw std::invalid_argument("project_sparse: shape mismatch");
  std::vector<Matrix> a = kernels::a_family(b.x, b.f.cores_tilde, z.omega(), z.values());
  for (Index k = 0; k < b.order(); ++k) a[u(k)] = gauge_core(b, k, a[u(k)]);
  return unchecked_tangent(base, std::move(a), Param::gauged);
}

TangentVector project_tt(const BasePtr& base, const TTTensor& z) {
  const BasePoint& b = *base;
  if (z.shape().n != b.shape().n) throw std::invalid_argument("project_tt: shape mismatch");
  const InnerProduct left = tt_inner(b.x, z);
  const InnerProduct right = tt_inner(z, tilde_tensor(b.shape(), b.f));
  std::vector<Matrix> cores;
  for (Index k = 0; k < b.order(); ++k) {
    Matrix a = detail::left_multiply_slices(left.left[u(k)], z.core(k), z.shape().rank(k)) * right.right[u(k + 1)];
    cores.push_back(gauge_core(b, k, a));
  }
  return unchecked_tangent(base, std::move(cores), Param::gauged);
}

TangentVector project(const BasePtr& base, const AmbientVector& z) {
  return std::visit(
      [&](const auto& t) -> TangentVector {
        using T = std::decay_t<decltype(t)>;
        if constexpr (std::is_same_v<T, DenseTensor>)
          return project_dense(base, t);
        else if constexpr (std::is_same_v<T, SparseTensor>)
          return project_sparse(base, t);
        else
          return project_tt(base, t);
      },
      z);
}

TTTensor tangent_to_tt(const TangentVector& v) {
  const BasePoint& b = *v.base();
  const std::vector<Matrix>& right = v.param() == Param::gauged ? b.f.cores_tilde : b.x.cores();
  return block_tt(b, right, v.cores(), nullptr);
}

DenseTensor densify(const TangentVector& v) { return tt_to_dense(tangent_to_tt(v)); }

std::vector<double> tangent_entries(const TangentVector& v, const IndexSet& omega) {
  const TangentVector w = to_param(v, Param::first);
  return kernels::tangent_entries(w.base()->x, w.cores(), omega);
}

RetractResult retract(const TangentVector& v, double t) {
  const BasePoint& b = *v.base();
  if (t == 0.0) return {b.x, false};
  const TangentVector w = to_param(v, Param::first);
  std::vector<Matrix> scaled = w.cores();
  for (auto& c : scaled) c *= t;
  TTTensor sum = block_tt(b, b.x.cores(), scaled, &b.U(b.order() - 1));
  RoundResult rr = tt_round_exact(sum, b.shape().interior_ranks());
  return {std::move(rr.tensor), rr.rank_deficient};
}

TangentVector transport(const BasePtr& new_base, const TangentVector& v) {
  if (new_base == v.base()) return to_param(v, Param::gauged);
  if (new_base->shape() != v.base()->shape()) throw std::invalid_argument("transport: shape mismatch");
  return project_tt(new_base, tangent_to_tt(v));
}

void write_tangent(std::ostream& os, const TangentVector& v) {
  const TangentVector w = to_param(v, Param::gauged);
  os.write("TTV1", 4);
  binio::put(os, std::uint8_t{1});
  for (const Matrix& c : w.cores())
    os.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_tangent: stream error");
}

TangentVector read_tangent(std::istream& is, BasePtr base) {
  binio::expect_magic(is, "TTV1");
  const auto tag = binio::get<std::uint8_t>(is);
  if (tag > 1) throw std::runtime_error("read_tangent: unknown parametrization tag");
  std::vector<Matrix> cores;
  for (Index k = 0; k < base->order(); ++k) {
    Matrix c(base->U(k).rows(), base->U(k).cols());
    if (!is.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double))))
      throw std::runtime_error("read_tangent: truncated core data");
    cores.push_back(std::move(c));
  }
  return make_tangent(std::move(base), std::move(cores), tag == 1 ? Param::gauged : Param::first);
}

}  // namespace ttman
