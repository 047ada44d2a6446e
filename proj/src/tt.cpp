#include "ttman/tt.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "ttman/detail/core_ops.hpp"

namespace ttman {

using detail::left_multiply_slices;
using detail::thin_qr;

namespace {

constexpr double kEps = Eigen::NumTraits<double>::epsilon();

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

Matrix reshape(const Matrix& m, Index rows, Index cols) { return Eigen::Map<const Matrix>(m.data(), rows, cols); }

Index numerical_rank(const Vector& sv, Index rows, Index cols) {
  if (sv.size() == 0 || sv(0) == 0.0) return 0;
  const double cut = static_cast<double>(std::max(rows, cols)) * kEps * sv(0);
  Index r = 0;
  while (r < sv.size() && sv(r) > cut) ++r;
  return r;
}

// Right-to-left QR sweep that tolerates ranks above the feasible bound by
// shrinking them. Returns the cores (core 0 absorbs everything) and updates
// the rank vector in place.
std::vector<Matrix> right_sweep(const TTTensor& x, Extents& r) {
  const Index d = x.order();
  std::vector<Matrix> cores = x.cores();
  r = x.shape().r;
  for (Index c = d - 1; c >= 1; --c) {
    const Index n = x.shape().mode(c);
    Matrix wt = detail::as_right(cores[u(c)], r[u(c)]).transpose();
    auto qr = thin_qr(wt);
    const Index k = qr.q.cols();
    Matrix qt = qr.q.transpose();
    cores[u(c)] = reshape(qt, k * n, r[u(c + 1)]);
    cores[u(c - 1)] = cores[u(c - 1)] * qr.r.transpose();
    r[u(c)] = k;
  }
  return cores;
}

}  // namespace

Shape::Shape(Extents modes, Extents ranks) : n(std::move(modes)), r(std::move(ranks)) {
  if (n.size() < 2) throw std::invalid_argument("Shape: order must be at least 2");
  if (r.size() != n.size() + 1) throw std::invalid_argument("Shape: need d+1 ranks");
  if (r.front() != 1 || r.back() != 1) throw std::invalid_argument("Shape: boundary ranks must be 1");
  for (Index x : n)
    if (x < 1) throw std::invalid_argument("Shape: mode sizes must be positive");
  for (Index x : r)
    if (x < 1) throw std::invalid_argument("Shape: ranks must be positive");
}

Shape Shape::from_interior(Extents modes, const Extents& interior) {
  Extents r;
  r.reserve(interior.size() + 2);
  r.push_back(1);
  r.insert(r.end(), interior.begin(), interior.end());
  r.push_back(1);
  return Shape(std::move(modes), std::move(r));
}

Shape Shape::uniform(Index d, Index n, Index rank) {
  return from_interior(Extents(u(d), n), Extents(u(d - 1), rank));
}

Shape Shape::uniform_capped(Index d, Index n, Index rank) {
  Extents interior(u(d - 1));
  for (Index k = 1; k < d; ++k) {
    Index cap = 1;
    for (Index j = 0; j < std::min(k, d - k) && cap < rank; ++j) cap *= n;
    interior[u(k - 1)] = std::min(rank, cap);
  }
  return from_interior(Extents(u(d), n), interior);
}

bool Shape::feasible() const {
  for (Index k = 0; k < order(); ++k) {
    if (rank(k + 1) > mode(k) * rank(k)) return false;
    if (rank(k) > mode(k) * rank(k + 1)) return false;
  }
  return true;
}

void Shape::require_feasible() const {
  if (!feasible())
    throw std::invalid_argument("Shape: ranks violate r[k+1] <= n[k] r[k] or r[k] <= n[k] r[k+1]");
}

Index Shape::manifold_dim() const {
  Index dim = 0;
  for (Index k = 0; k < order(); ++k) dim += rank(k) * mode(k) * rank(k + 1);
  for (Index k = 1; k < order(); ++k) dim -= rank(k) * rank(k);
  return dim;
}

TTTensor::TTTensor(Shape shape, std::vector<Matrix> cores, Orth orth, Index center)
    : shape_(std::move(shape)), cores_(std::move(cores)), orth_(orth), center_(center) {
  if (static_cast<Index>(cores_.size()) != shape_.order())
    throw std::invalid_argument("TTTensor: core count does not match order");
  for (Index k = 0; k < shape_.order(); ++k) {
    const auto& c = cores_[u(k)];
    if (c.rows() != shape_.rank(k) * shape_.mode(k) || c.cols() != shape_.rank(k + 1))
      throw std::invalid_argument("TTTensor: core " + std::to_string(k) + " has wrong extents");
  }
  if (orth_ == Orth::left) center_ = shape_.order() - 1;
  if (orth_ == Orth::right) center_ = 0;
}

TTTensor TTTensor::zeros(const Shape& shape) {
  std::vector<Matrix> cores;
  for (Index k = 0; k < shape.order(); ++k)
    cores.push_back(Matrix::Zero(shape.rank(k) * shape.mode(k), shape.rank(k + 1)));
  return TTTensor(shape, std::move(cores));
}

Eigen::Map<const Matrix> TTTensor::core_right(Index k) const { return detail::as_right(core(k), shape_.rank(k)); }

double TTTensor::norm() const {
  Matrix g = Matrix::Ones(1, 1);
  for (Index k = 0; k < order(); ++k) g = detail::left_gram_step(g, core(k), core(k), shape_.rank(k));
  return std::sqrt(std::max(0.0, g(0, 0)));
}

double tt_entry(const TTTensor& x, std::span<const Index> idx) {
  if (static_cast<Index>(idx.size()) != x.order()) throw std::invalid_argument("tt_entry: index order mismatch");
  Eigen::RowVectorXd v = Eigen::RowVectorXd::Ones(1);
  for (Index k = 0; k < x.order(); ++k) {
    if (idx[u(k)] < 0 || idx[u(k)] >= x.shape().mode(k)) throw std::out_of_range("tt_entry: index out of bounds");
    v = v * x.slice(k, idx[u(k)]);
  }
  return v(0);
}

Matrix left_interface(const TTTensor& x, Index m) {
  if (m < 0 || m > x.order()) throw std::out_of_range("left_interface: bad split");
  Matrix l = Matrix::Ones(1, 1);
  for (Index k = 0; k < m; ++k) {
    const Index n = x.shape().mode(k);
    Matrix next(l.rows() * n, x.shape().rank(k + 1));
    for (Index i = 0; i < n; ++i) next.middleRows(i * l.rows(), l.rows()) = l * x.slice(k, i);
    l = std::move(next);
  }
  return l;
}

Matrix right_interface(const TTTensor& x, Index m) {
  if (m < 0 || m > x.order()) throw std::out_of_range("right_interface: bad split");
  Matrix r = Matrix::Ones(1, 1);
  for (Index k = x.order() - 1; k >= m; --k) {
    const Index n = x.shape().mode(k);
    Matrix next(r.rows() * n, x.shape().rank(k));
    for (Index i = 0; i < n; ++i) {
      Matrix block = r * x.slice(k, i).transpose();
      for (Index q = 0; q < r.rows(); ++q) next.row(i + n * q) = block.row(q);
    }
    r = std::move(next);
  }
  return r;
}

DenseTensor tt_to_dense(const TTTensor& x) {
  DenseTensor t(x.shape().n);
  t.vec() = left_interface(x, x.order()).col(0);
  return t;
}

TTTensor tt_svd(const DenseTensor& t, const TruncationTarget& target) {
  const Index d = t.order();
  if (d < 2) throw std::invalid_argument("tt_svd: order must be at least 2");
  if (target.ranks && static_cast<Index>(target.ranks->size()) != d - 1)
    throw std::invalid_argument("tt_svd: need d-1 target ranks");
  const double delta =
      target.rel_tol ? *target.rel_tol * t.norm() / std::sqrt(static_cast<double>(d - 1)) : 0.0;

  Extents r(u(d + 1), 1);
  std::vector<Matrix> cores;
  Matrix c = Eigen::Map<const Matrix>(t.vec().data(), 1, t.size());
  for (Index k = 0; k < d - 1; ++k) {
    const Index n = t.dims()[u(k)];
    const Index rows = r[u(k)] * n;
    Matrix m = reshape(c, rows, c.size() / rows);
    Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    Index keep = numerical_rank(sv, m.rows(), m.cols());
    if (target.rel_tol) {
      double tail = 0.0;
      Index rr = sv.size();
      while (rr > 1 && std::sqrt(tail + sv(rr - 1) * sv(rr - 1)) <= delta) {
        tail += sv(rr - 1) * sv(rr - 1);
        --rr;
      }
      keep = std::min(keep, rr);
    }
    if (target.ranks) keep = std::min(keep, (*target.ranks)[u(k)]);
    keep = std::max<Index>(keep, 1);
    r[u(k + 1)] = keep;
    cores.push_back(svd.matrixU().leftCols(keep));
    c = sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
  }
  cores.push_back(reshape(c, c.size(), 1));
  return TTTensor(Shape(t.dims(), r), std::move(cores), Orth::left);
}

Extents tt_rank(const DenseTensor& t) {
  Extents r;
  for (Index mu = 1; mu < t.order(); ++mu) {
    Matrix m = flatten(t, mu);
    Eigen::BDCSVD<Matrix> svd(m);
    r.push_back(numerical_rank(svd.singularValues(), m.rows(), m.cols()));
  }
  return r;
}

TTTensor mu_orthogonalize(const TTTensor& x, Index mu) {
  const Index d = x.order();
  if (mu < 0 || mu >= d) throw std::out_of_range("mu_orthogonalize: center out of range");
  const Shape& s = x.shape();
  std::vector<Matrix> cores = x.cores();
  for (Index k = 0; k < mu; ++k) {
    const Matrix& c = cores[u(k)];
    if (c.rows() < c.cols()) throw RankDeficiencyError("mu_orthogonalize: core " + std::to_string(k) + " is wide");
    auto qr = thin_qr(c);
    if (detail::triangular_rank_deficient(qr.r, c.rows(), c.cols()))
      throw RankDeficiencyError("mu_orthogonalize: core " + std::to_string(k) + " is rank deficient");
    cores[u(k)] = qr.q;
    cores[u(k + 1)] = left_multiply_slices(qr.r, cores[u(k + 1)], s.rank(k + 1));
  }
  for (Index k = d - 1; k > mu; --k) {
    Matrix wt = detail::as_right(cores[u(k)], s.rank(k)).transpose();
    if (wt.rows() < wt.cols()) throw RankDeficiencyError("mu_orthogonalize: core " + std::to_string(k) + " is wide");
    auto qr = thin_qr(wt);
    if (detail::triangular_rank_deficient(qr.r, wt.rows(), wt.cols()))
      throw RankDeficiencyError("mu_orthogonalize: core " + std::to_string(k) + " is rank deficient");
    Matrix qt = qr.q.transpose();
    cores[u(k)] = reshape(qt, s.rank(k) * s.mode(k), s.rank(k + 1));
    cores[u(k - 1)] = cores[u(k - 1)] * qr.r.transpose();
  }
  Orth o = mu == d - 1 ? Orth::left : (mu == 0 ? Orth::right : Orth::mu);
  return TTTensor(s, std::move(cores), o, mu);
}

RightOrthFactors right_orthogonalize_with_R(const TTTensor& x) {
  const Index d = x.order();
  const Shape& s = x.shape();
  RightOrthFactors f;
  f.cores_tilde = x.cores();
  f.R.resize(u(d - 1));
  for (Index c = d - 1; c >= 1; --c) {
    Matrix wt = detail::as_right(f.cores_tilde[u(c)], s.rank(c)).transpose();
    if (wt.rows() < wt.cols()) throw RankDeficiencyError("right_orthogonalize_with_R: infeasible ranks");
    auto qr = thin_qr(wt);
    if (detail::triangular_rank_deficient(qr.r, wt.rows(), wt.cols()))
      throw RankDeficiencyError("right_orthogonalize_with_R: R factor " + std::to_string(c - 1) +
                                " is singular");
    Matrix qt = qr.q.transpose();
    f.cores_tilde[u(c)] = reshape(qt, s.rank(c) * s.mode(c), s.rank(c + 1));
    f.cores_tilde[u(c - 1)] = f.cores_tilde[u(c - 1)] * qr.r.transpose();
    f.R[u(c - 1)] = std::move(qr.r);
  }
  return f;
}

TTTensor tilde_tensor(const Shape& shape, const RightOrthFactors& f) {
  return TTTensor(shape, f.cores_tilde, Orth::right);
}

InnerProduct tt_inner(const TTTensor& x, const TTTensor& y) {
  if (x.shape().n != y.shape().n) throw std::invalid_argument("tt_inner: mode sizes differ");
  const Index d = x.order();
  InnerProduct ip;
  ip.left.assign(u(d + 1), Matrix::Ones(1, 1));
  ip.right.assign(u(d + 1), Matrix::Ones(1, 1));
  for (Index k = 0; k < d; ++k)
    ip.left[u(k + 1)] = detail::left_gram_step(ip.left[u(k)], x.core(k), y.core(k), y.shape().rank(k));
  for (Index k = d - 1; k >= 0; --k)
    ip.right[u(k)] =
        detail::right_gram_step(ip.right[u(k + 1)], x.core(k), x.shape().rank(k), y.core(k), y.shape().rank(k));
  ip.value = ip.left[u(d)](0, 0);
  return ip;
}

TTTensor tt_add(const TTTensor& x, const TTTensor& y) {
  if (x.shape().n != y.shape().n) throw std::invalid_argument("tt_add: mode sizes differ");
  const Index d = x.order();
  const Shape& sx = x.shape();
  const Shape& sy = y.shape();
  Extents r(u(d + 1), 1);
  for (Index k = 1; k < d; ++k) r[u(k)] = sx.rank(k) + sy.rank(k);
  std::vector<Matrix> cores;
  for (Index k = 0; k < d; ++k) {
    const Index n = sx.mode(k);
    Matrix c = Matrix::Zero(r[u(k)] * n, r[u(k + 1)]);
    const Index rxl = sx.rank(k), rxr = sx.rank(k + 1);
    const Index ryl = sy.rank(k), ryr = sy.rank(k + 1);
    for (Index i = 0; i < n; ++i) {
      auto blk = c.middleRows(i * r[u(k)], r[u(k)]);
      if (k == 0) {
        blk.leftCols(rxr) = x.slice(k, i);
        blk.rightCols(ryr) = y.slice(k, i);
      } else if (k == d - 1) {
        blk.topRows(rxl) = x.slice(k, i);
        blk.bottomRows(ryl) = y.slice(k, i);
      } else {
        blk.topLeftCorner(rxl, rxr) = x.slice(k, i);
        blk.bottomRightCorner(ryl, ryr) = y.slice(k, i);
      }
    }
    cores.push_back(std::move(c));
  }
  return TTTensor(Shape(sx.n, r), std::move(cores));
}

TTTensor tt_scale(const TTTensor& x, double s) {
  std::vector<Matrix> cores = x.cores();
  cores.back() *= s;
  return TTTensor(x.shape(), std::move(cores), x.orth(), x.center());
}

namespace {

RoundResult round_impl(const TTTensor& x, const Extents& ranks, bool exact) {
  const Index d = x.order();
  if (static_cast<Index>(ranks.size()) != d - 1) throw std::invalid_argument("tt_round: need d-1 target ranks");
  Extents r;
  std::vector<Matrix> cores = right_sweep(x, r);
  RoundResult out;
  for (Index k = 0; k < d - 1; ++k) {
    const Matrix& c = cores[u(k)];
    Eigen::BDCSVD<Matrix> svd(c, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();
    const Index num = numerical_rank(sv, c.rows(), c.cols());
    const Index want = ranks[u(k)];
    Index keep;
    if (exact) {
      if (num < want) out.rank_deficient = true;
      keep = std::min<Index>(want, sv.size());
    } else {
      keep = std::min(want, num);
    }
    keep = std::max<Index>(keep, 1);
    cores[u(k)] = svd.matrixU().leftCols(keep);
    Matrix sv_t = sv.head(keep).asDiagonal() * svd.matrixV().leftCols(keep).transpose();
    cores[u(k + 1)] = left_multiply_slices(sv_t, cores[u(k + 1)], r[u(k + 1)]);
    r[u(k + 1)] = keep;
  }
  out.tensor = TTTensor(Shape(x.shape().n, r), std::move(cores), Orth::left);
  return out;
}

}  // namespace

TTTensor tt_round(const TTTensor& x, const Extents& ranks) { return round_impl(x, ranks, false).tensor; }

RoundResult tt_round_exact(const TTTensor& x, const Extents& ranks) { return round_impl(x, ranks, true); }

TTTensor random_tt(const Shape& shape, std::uint64_t seed) {
  shape.require_feasible();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Matrix> cores;
  for (Index k = 0; k < shape.order(); ++k) {
    Matrix c(shape.rank(k) * shape.mode(k), shape.rank(k + 1));
    for (Index j = 0; j < c.size(); ++j) c.data()[j] = normal(rng);
    cores.push_back(std::move(c));
  }
  return left_orthogonalize(TTTensor(shape, std::move(cores)));
}

}  // namespace ttman
