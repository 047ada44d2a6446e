#include "ttman/lanczos.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace ttman {

namespace {

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

Vector flat(const TangentVector& v0) {
  const TangentVector v = to_param(v0, Param::gauged);
  Index n = 0;
  for (const auto& c : v.cores()) n += c.size();
  Vector out(n);
  Index off = 0;
  for (const auto& c : v.cores()) {
    out.segment(off, c.size()) = Eigen::Map<const Vector>(c.data(), c.size());
    off += c.size();
  }
  return out;
}

TangentVector unflat(const BasePtr& base, const Vector& x) {
  std::vector<Matrix> cores;
  Index off = 0;
  for (Index k = 0; k < base->order(); ++k) {
    const Matrix& u0 = base->U(k);
    cores.push_back(Eigen::Map<const Matrix>(x.data() + off, u0.rows(), u0.cols()));
    off += u0.size();
  }
  return make_tangent(base, std::move(cores), Param::gauged, true);
}

ConditionEstimate summarize(const Vector& evals, const Vector& residuals, double null_rel) {
  ConditionEstimate c;
  const Index m = evals.size();
  c.lambda_max = evals(m - 1);
  c.lambda_min = evals(0);
  c.residual_max = residuals(m - 1);
  const double cut = null_rel * std::abs(c.lambda_max);
  Index j = 0;
  while (j < m && evals(j) <= cut) ++j;
  if (j < m) {
    c.lambda_min_pos = evals(j);
    c.residual_min_pos = residuals(j);
    c.kappa = c.lambda_max / c.lambda_min_pos;
  } else {
    c.kappa = std::numeric_limits<double>::infinity();
  }
  return c;
}

}  // namespace

std::vector<TangentVector> tangent_basis(const BasePtr& base) {
  const BasePoint& b = *base;
  const Index d = b.order();
  std::vector<TangentVector> basis;
  const TangentVector zero = TangentVector::zero(base);
  for (Index k = 0; k < d; ++k) {
    const Matrix& uk = b.U(k);
    Matrix q;
    if (k + 1 < d) {
      Eigen::HouseholderQR<Matrix> qr(uk);
      Matrix full = qr.householderQ();
      q = full.rightCols(uk.rows() - uk.cols());
    } else {
      q = Matrix::Identity(uk.rows(), uk.rows());
    }
    for (Index bcol = 0; bcol < uk.cols(); ++bcol)
      for (Index a = 0; a < q.cols(); ++a) {
        std::vector<Matrix> cores = zero.cores();
        cores[u(k)].col(bcol) = q.col(a);
        basis.push_back(unchecked_tangent(base, std::move(cores), Param::gauged));
      }
  }
  return basis;
}

Matrix assemble_operator(const BasePtr& base, const TangentOp& op) {
  const std::vector<TangentVector> basis = tangent_basis(base);
  const Index n = static_cast<Index>(basis.size());
  Matrix m(n, n);
  for (Index j = 0; j < n; ++j) {
    const TangentVector y = op(basis[u(j)]);
    for (Index i = 0; i < n; ++i) m(i, j) = tangent_inner(basis[u(i)], y);
  }
  return m;
}

ConditionEstimate dense_condition(const Matrix& h, double null_rel) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (h + h.transpose()), Eigen::EigenvaluesOnly);
  ConditionEstimate c = summarize(es.eigenvalues(), Vector::Zero(h.rows()), null_rel);
  c.iterations = h.rows();
  c.converged = true;
  return c;
}

ConditionEstimate lanczos_condition(const BasePtr& base, const TangentOp& op, const ConditionOptions& opt) {
  const Index dim = base->shape().manifold_dim();
  const Index max_iter = opt.max_iter > 0 ? std::min(opt.max_iter, dim) : std::min<Index>(dim, 4000);

  std::mt19937_64 rng(opt.seed);
  std::normal_distribution<double> normal;
  std::vector<Matrix> start;
  for (const Matrix& c : base->x.cores()) {
    Matrix m(c.rows(), c.cols());
    for (Index i = 0; i < m.size(); ++i) m.data()[i] = normal(rng);
    start.push_back(std::move(m));
  }
  Vector q = flat(make_tangent(base, std::move(start), Param::gauged, true));
  q.normalize();

  const Index n = q.size();
  Matrix Q(n, max_iter);
  std::vector<double> alpha, beta;
  ConditionEstimate best;
  Vector evals, resid;
  for (Index j = 0; j < max_iter; ++j) {
    Q.col(j) = q;
    Vector w = flat(op(unflat(base, q)));
    const double a = q.dot(w);
    alpha.push_back(a);
    // two passes of classical Gram-Schmidt against every previous vector
    for (int pass = 0; pass < 2; ++pass) w -= Q.leftCols(j + 1) * (Q.leftCols(j + 1).transpose() * w);
    const double bnorm = w.norm();

    const Index m = j + 1;
    Matrix t = Matrix::Zero(m, m);
    for (Index i = 0; i < m; ++i) t(i, i) = alpha[u(i)];
    for (Index i = 0; i + 1 < m; ++i) t(i, i + 1) = t(i + 1, i) = beta[u(i)];
    Eigen::SelfAdjointEigenSolver<Matrix> es(t);
    evals = es.eigenvalues();
    resid = (bnorm * es.eigenvectors().row(m - 1)).cwiseAbs().transpose();
    best = summarize(evals, resid, opt.null_rel);
    best.iterations = m;

    const double scale = std::abs(best.lambda_max);
    const bool exhausted = bnorm <= 1e-12 * std::max(scale, 1e-300) || m == dim;
    const bool max_ok = best.residual_max <= opt.tol * std::max(scale, 1e-300);
    const bool min_ok = best.lambda_min_pos > 0 && best.residual_min_pos <= opt.tol * best.lambda_min_pos;
    if (exhausted || (m >= 10 && max_ok && min_ok)) {
      best.converged = true;
      break;
    }
    beta.push_back(bnorm);
    q = w / bnorm;
  }
  return best;
}

ConditionEstimate condition_estimate(const Problem& problem, const BasePtr& x, const ConditionOptions& opt) {
  const AmbientVector eg = problem.egrad(*x);
  return lanczos_condition(x, problem.hessian_operator(x, eg), opt);
}

}  // namespace ttman
