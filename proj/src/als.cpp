#include "ttman/als.hpp"

#include <algorithm>

#include <Eigen/QR>

#include "ttman/detail/core_ops.hpp"

namespace ttman {

namespace {

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

class AlsState {
 public:
  AlsState(const TTTensor& x, const SparseTensor& data)
      : shape_(x.shape()), cores_(x.cores()), data_(data), d_(x.order()), nnz_(data.nnz()) {
    buckets_.resize(u(d_));
    for (Index k = 0; k < d_; ++k) {
      buckets_[u(k)].resize(u(shape_.mode(k)));
      for (Index s = 0; s < nnz_; ++s) buckets_[u(k)][u(data.omega()(s, k))].push_back(s);
    }
    left_.assign(u(d_ + 1), Matrix());
    right_.assign(u(d_ + 1), Matrix());
    left_[0] = Matrix::Ones(1, nnz_);
    right_[u(d_)] = Matrix::Ones(1, nnz_);
    for (Index k = d_ - 1; k >= 1; --k) update_right(k);
  }

  TTTensor tensor() const { return TTTensor(shape_, cores_); }
  Index ridge_warnings() const { return ridge_; }

  void solve_core(Index k) {
    const Index rl = shape_.rank(k), rr = shape_.rank(k + 1);
    const Matrix& l = left_[u(k)];
    const Matrix& r = right_[u(k + 1)];
    for (Index i = 0; i < shape_.mode(k); ++i) {
      const auto& ids = buckets_[u(k)][u(i)];
      if (ids.empty()) {
        ++ridge_;
        continue;
      }
      const Index m = static_cast<Index>(ids.size());
      Matrix a(m, rl * rr);
      Vector rhs(m);
      for (Index t = 0; t < m; ++t) {
        const Index s = ids[u(t)];
        for (Index b = 0; b < rr; ++b) a.row(t).segment(b * rl, rl) = r(b, s) * l.col(s).transpose();
        rhs(t) = data_.values()[u(s)];
      }
      Eigen::ColPivHouseholderQR<Matrix> qr(a);
      Vector sol;
      if (qr.rank() < a.cols()) {
        ++ridge_;
        const double lam = 1e-12 * std::max(1.0, a.squaredNorm());
        Matrix aug(m + a.cols(), a.cols());
        aug << a, std::sqrt(lam) * Matrix::Identity(a.cols(), a.cols());
        Vector rhs_aug = Vector::Zero(m + a.cols());
        rhs_aug.head(m) = rhs;
        sol = aug.colPivHouseholderQr().solve(rhs_aug);
      } else {
        sol = qr.solve(rhs);
      }
      cores_[u(k)].middleRows(i * rl, rl) = Eigen::Map<const Matrix>(sol.data(), rl, rr);
    }
  }

  // Center k -> k+1.
  void move_right(Index k) {
    auto qr = detail::thin_qr(cores_[u(k)]);
    cores_[u(k)] = qr.q;
    cores_[u(k + 1)] = detail::left_multiply_slices(qr.r, cores_[u(k + 1)], shape_.rank(k + 1));
    Matrix& next = left_[u(k + 1)];
    next.resize(shape_.rank(k + 1), nnz_);
    const Index rl = shape_.rank(k);
    for (Index s = 0; s < nnz_; ++s)
      next.col(s).noalias() = cores_[u(k)].middleRows(data_.omega()(s, k) * rl, rl).transpose() * left_[u(k)].col(s);
  }

  // Center k -> k-1.
  void move_left(Index k) {
    const Index rl = shape_.rank(k);
    Matrix wt = detail::as_right(cores_[u(k)], rl).transpose();
    auto qr = detail::thin_qr(wt);
    Matrix qt = qr.q.transpose();
    cores_[u(k)] = Eigen::Map<const Matrix>(qt.data(), rl * shape_.mode(k), shape_.rank(k + 1));
    cores_[u(k - 1)] = cores_[u(k - 1)] * qr.r.transpose();
    update_right(k);
  }

 private:
  void update_right(Index k) {
    const Index rl = shape_.rank(k);
    Matrix& cur = right_[u(k)];
    cur.resize(rl, nnz_);
    for (Index s = 0; s < nnz_; ++s)
      cur.col(s).noalias() = cores_[u(k)].middleRows(data_.omega()(s, k) * rl, rl) * right_[u(k + 1)].col(s);
  }

  Shape shape_;
  std::vector<Matrix> cores_;
  const SparseTensor& data_;
  Index d_, nnz_;
  std::vector<std::vector<std::vector<Index>>> buckets_;
  std::vector<Matrix> left_, right_;
  Index ridge_ = 0;
};

}  // namespace

AlsResult als_minimize(const CompletionProblem& problem, const TTTensor& x0, const AlsConfig& cfg, Index trial) {
  Stopwatch sw;
  AlsResult out;
  out.log.trial = trial;
  out.log.algo = "als";
  const Index d = x0.order();

  auto log_point = [&](Index iter, const TTTensor& t, const std::string& kind) {
    double gn = nan_value();
    BasePtr b;
    try {
      b = make_base_point(t);
      gn = tangent_norm(problem.rgrad(b));
    } catch (const RankDeficiencyError&) {
    }
    const double f = completion_cost(t, problem.train());
    const double tc = problem.test() ? completion_cost(t, *problem.test()) : nan_value();
    out.log.add(RunRow{iter, sw.seconds(), f, tc, gn, nan_value(), kind});
    return gn;
  };

  AlsState st(right_orthogonalize(x0), problem.train());
  double gn = log_point(0, x0, "init");
  out.grad_tol = resolve_grad_tol(cfg.grad_tol, gn);
  out.stop_reason = "max_iters";
  const double norm_cap = kAlsDivergence * std::max({1.0, x0.norm(), problem.train().norm()});
  for (Index sweep = 1; sweep <= cfg.max_sweeps; ++sweep) {
    if (st.tensor().norm() > norm_cap) {
      out.stop_reason = "diverged";
      break;
    }
    if (gn < out.grad_tol) {
      out.converged = true;
      out.stop_reason = "grad_tol";
      break;
    }
    if (sw.seconds() >= cfg.max_time_s) {
      out.stop_reason = "max_time";
      break;
    }
    for (Index k = 0; k < d; ++k) {
      st.solve_core(k);
      if (cfg.on_core_update) cfg.on_core_update(st.tensor(), k);
      if (k + 1 < d) st.move_right(k);
    }
    for (Index k = d - 1; k >= 1; --k) {
      st.move_left(k);
      st.solve_core(k - 1);
      if (cfg.on_core_update) cfg.on_core_update(st.tensor(), k - 1);
    }
    gn = log_point(sweep, st.tensor(), "sweep");
  }
  if (out.stop_reason == "max_iters" && gn < out.grad_tol && st.tensor().norm() <= norm_cap) {
    out.converged = true;
    out.stop_reason = "grad_tol";
  }
  out.ridge_warnings = st.ridge_warnings();
  TTTensor fin = st.tensor();
  try {
    out.x = left_orthogonalize(fin);
  } catch (const RankDeficiencyError&) {
    out.x = fin;
  }
  return out;
}

}  // namespace ttman
