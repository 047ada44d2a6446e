#include "ttman/checks.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <random>

#include <Eigen/Eigenvalues>

#include "ttman/detail/core_ops.hpp"
#include "ttman/lanczos.hpp"
#include "ttman/oracles.hpp"

namespace ttman {

namespace {

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

class Timer {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

CheckResult finish(std::string name, double err, double tol, const Timer& t, std::string detail = {}) {
  return CheckResult{std::move(name), err <= tol, err, tol, t.seconds(), std::move(detail)};
}

BasePtr random_base(const Shape& s, std::mt19937_64& rng) { return make_base_point(random_tt(s, rng())); }

/// Unit-norm random direction. The difference step is absolute, so the
/// oracle truncation error grows with ||V||.
TangentVector unit_tangent(const BasePtr& b, std::mt19937_64& rng) {
  TangentVector v = random_tangent(b, rng);
  v *= 1.0 / tangent_norm(v);
  return v;
}

double rel(const Matrix& a, const Matrix& b, double floor = 1e-300) {
  return (a - b).norm() / std::max(b.norm(), floor);
}

/// Relative tangent distance with a floor on the natural scale ||V|| ||Z||.
double rel_tangent(const TangentVector& a, const TangentVector& b, double floor) {
  return tangent_norm(a - b) / std::max(tangent_norm(b), floor);
}

SparseTensor random_sparse(const Extents& dims, Index nnz, std::mt19937_64& rng) {
  std::vector<std::vector<double>> p;
  for (Index nk : dims) p.push_back(uniform_distribution(nk));
  auto omega = std::make_shared<const IndexSet>(sample_indices(SamplingSpec{p, nnz, rng()}, dims));
  std::normal_distribution<double> normal;
  std::vector<double> vals(u(nnz));
  for (double& v : vals) v = normal(rng);
  return SparseTensor(omega, std::move(vals));
}

}  // namespace

bool CheckReport::passed() const {
  for (const auto& r : results)
    if (!r.passed) return false;
  return true;
}

CheckLevel parse_check_level(const std::string& s) {
  if (s == "fast") return CheckLevel::fast;
  if (s == "full") return CheckLevel::full;
  throw std::invalid_argument("unknown check level '" + s + "'");
}

CompletionProblem make_completion_instance(const Shape& s, double oversampling, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const TTTensor target = random_tt(s, rng());
  const Index count = static_cast<Index>(std::llround(oversampling * static_cast<double>(s.manifold_dim())));
  std::vector<std::vector<double>> p;
  for (Index nk : s.n) p.push_back(uniform_distribution(nk));
  auto train = std::make_shared<const IndexSet>(sample_indices(SamplingSpec{p, count, rng()}, s.n));
  auto test = std::make_shared<const IndexSet>(sample_indices(SamplingSpec{p, count, rng()}, s.n));
  return CompletionProblem(observe(target, train), observe(target, test));
}

namespace checks {

CheckResult projector_assembly(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const Matrix p = oracle::assemble_projector(b);
  const double sym = (p - p.transpose()).norm();
  const double idem = (p * p - p).norm();
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (p + p.transpose()));
  Index rank = 0;
  for (Index i = 0; i < es.eigenvalues().size(); ++i) rank += es.eigenvalues()(i) > 0.5 ? 1 : 0;
  const Index dim = s.manifold_dim();
  char buf[128];
  std::snprintf(buf, sizeof(buf), "sym %.2e idem %.2e rank %ld dim %ld", sym, idem, static_cast<long>(rank),
                static_cast<long>(dim));
  CheckResult r = finish("projector_assembly", std::max(sym, idem), tol, t, buf);
  r.passed = r.passed && rank == dim;
  return r;
}

CheckResult interface_factorization(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  std::vector<Matrix> cores;
  for (Index k = 0; k < s.order(); ++k) {
    Matrix c(s.rank(k) * s.mode(k), s.rank(k + 1));
    for (Index i = 0; i < c.size(); ++i) c.data()[i] = normal(rng);
    cores.push_back(std::move(c));
  }
  const TTTensor x(s, std::move(cores));
  const DenseTensor full = tt_to_dense(x);
  double err = 0.0;
  for (Index k = 1; k < s.order(); ++k)
    err = std::max(err, rel(left_interface(x, k) * right_interface(x, k).transpose(), flatten(full, k)));
  return finish("interface_factorization", err, tol, t);
}

CheckResult interface_orthonormality(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const TTTensor tilde = tilde_tensor(s, b->f);
  double err = 0.0;
  for (Index k = 1; k < s.order(); ++k) {
    const Matrix l = left_interface(b->x, k);
    const Matrix r = right_interface(tilde, k);
    err = std::max(err, (l.transpose() * l - Matrix::Identity(l.cols(), l.cols())).norm());
    err = std::max(err, (r.transpose() * r - Matrix::Identity(r.cols(), r.cols())).norm());
  }
  return finish("interface_orthonormality", err, tol, t);
}

CheckResult param_conversion(const Shape& s, std::uint64_t seed, bool corrupt_r, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  BasePtr good = random_base(s, rng);
  BasePtr used = good;
  if (corrupt_r) {
    auto bad = std::make_shared<BasePoint>(*good);
    bad->f.R[0] *= -1.0;
    used = bad;
  }
  const TangentVector v = random_tangent(good, rng);
  const TangentVector on_used = unchecked_tangent(used, v.cores(), Param::gauged);
  const TTTensor tilde = tilde_tensor(s, used->f);
  double err = 0.0;
  for (Index k = 0; k + 1 < s.order(); ++k)
    err = std::max(err, rel(right_interface(tilde, k + 1) * used->R(k), right_interface(used->x, k + 1)));
  const DenseTensor ref = densify(v);
  err = std::max(err, oracle::rel_error(densify(convert_param(on_used)), ref));
  err = std::max(err, oracle::rel_error(densify(convert_param(convert_param(on_used))), ref));
  return finish(corrupt_r ? "param_conversion(corrupted R)" : "param_conversion", err, tol, t);
}

CheckResult tangent_reprojection(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const TangentVector v = random_tangent(b, rng);
  const TangentVector w = project_dense(b, densify(v));
  return finish("tangent_reprojection", tangent_norm(w - v) / tangent_norm(v), tol, t);
}

CheckResult variational_derivative(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const TangentVector v = unit_tangent(b, rng);
  const VariationalInterfaces vi = variational_interfaces(v);
  double err = 0.0;
  for (Index k = 1; k <= s.order(); ++k) {
    const Matrix num = oracle::central_difference_raw(v, [k](const TTTensor& x) { return left_interface(x, k); });
    err = std::max(err, rel(vi.le[u(k)], num, 1.0));
  }
  for (Index k = 0; k < s.order(); ++k) {
    const Matrix num = oracle::central_difference_raw(v, [k](const TTTensor& x) { return right_interface(x, k); });
    err = std::max(err, rel(vi.ge[u(k)], num, 1.0));
  }
  return finish("variational_derivative", err, tol, t);
}

CheckResult left_projector_derivative(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const TangentVector v = unit_tangent(b, rng);
  const VariationalInterfaces vi = variational_interfaces(v);
  double err = 0.0;
  for (Index k = 1; k < s.order(); ++k) {
    auto proj = [k](const BasePtr& c) {
      const Matrix l = left_interface(c->x, k);
      return Matrix(l * l.transpose());
    };
    const Matrix num = (proj(oracle::curve_point(v, oracle::kStep)) - proj(oracle::curve_point(v, -oracle::kStep))) /
                       (2.0 * oracle::kStep);
    const Matrix x = left_interface(b->x, k);
    const Matrix formula = vi.le[u(k)] * x.transpose() + x * vi.le[u(k)].transpose();
    err = std::max(err, rel(formula, num, 1.0));
  }
  return finish("left_projector_derivative", err, tol, t);
}

CheckResult variational_cancellation(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const TangentVector v = random_tangent(b, rng);
  const VariationalInterfaces vi = variational_interfaces(v);
  double err = 0.0;
  for (Index k = 1; k < s.order(); ++k)
    err = std::max(err, (vi.le[u(k)].transpose() * left_interface(b->x, k)).norm() / vi.le[u(k)].norm());
  return finish("variational_cancellation", err, tol, t);
}

CheckResult right_projector_derivative(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const TangentVector v = unit_tangent(b, rng);
  const VariationalInterfaces vi = variational_interfaces(v);
  double err = 0.0;
  for (Index k = 0; k + 1 < s.order(); ++k) {
    auto proj = [&s, k](const BasePtr& c) {
      const Matrix r = right_interface(tilde_tensor(s, c->f), k + 1);
      return Matrix(r * r.transpose());
    };
    const Matrix num = (proj(oracle::curve_point(v, oracle::kStep)) - proj(oracle::curve_point(v, -oracle::kStep))) /
                       (2.0 * oracle::kStep);
    const Matrix xt = right_interface(tilde_tensor(s, b->f), k + 1);
    const Matrix dv = vi.ge[u(k + 1)];
    const Matrix half =
        detail::right_solve_upper(dv - xt * (xt.transpose() * dv), b->R(k)) * xt.transpose();
    err = std::max(err, rel(Matrix(half + half.transpose()), num, 1.0));
  }
  return finish("right_projector_derivative", err, tol, t);
}

CheckResult weingarten_numeric(const Shape& s, Index trials, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  double err = 0.0;
  for (Index trial = 0; trial < trials; ++trial) {
    const BasePtr b = random_base(s, rng);
    const TangentVector v = unit_tangent(b, rng);
    const DenseTensor z = random_dense(s.n, rng);
    const TangentVector w = weingarten(v, z);
    const TangentVector ref = project_dense(b, oracle::projector_derivative(v, z));
    err = std::max(err, rel_tangent(w, ref, 1e-2 * tangent_norm(v) * z.norm()));
  }
  return finish("weingarten_numeric", err, tol, t, std::to_string(trials) + " trials");
}

CheckResult diagonal_terms(const Shape& s, Index trials, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  double err = 0.0;
  for (Index trial = 0; trial < trials; ++trial) {
    const BasePtr b = random_base(s, rng);
    const TangentVector v = unit_tangent(b, rng);
    const DenseTensor z = random_dense(s.n, rng);
    const HessianWorkspace ws = make_workspace(v, z);
    const double floor = 1e-2 * tangent_norm(v) * z.norm();
    for (Index k = 0; k < s.order(); ++k) {
      const TangentVector ref = project_dense_component(b, oracle::component_derivative(v, z, k), k);
      err = std::max(err, rel_tangent(diagonal_term(ws, k), ref, floor));
    }
  }
  return finish("diagonal_terms", err, tol, t);
}

CheckResult cross_terms(const Shape& s, Index trials, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  double err = 0.0;
  for (Index trial = 0; trial < trials; ++trial) {
    const BasePtr b = random_base(s, rng);
    const TangentVector v = unit_tangent(b, rng);
    const DenseTensor z = random_dense(s.n, rng);
    const HessianWorkspace ws = make_workspace(v, z);
    const double floor = 1e-2 * tangent_norm(v) * z.norm();
    for (Index j = 0; j < s.order(); ++j) {
      const DenseTensor yj = densify(project_dense_component(b, z, j));
      for (Index i = 0; i < s.order(); ++i) {
        if (i == j) continue;
        DenseTensor ref = oracle::component_derivative(v, yj, i);
        ref *= -1.0;
        err = std::max(err, (densify(cross_term(ws, i, j)) - ref).norm() / std::max(ref.norm(), floor));
      }
    }
  }
  return finish("cross_terms", err, tol, t);
}

CheckResult sparse_vs_dense(const Shape& s, Index trials, std::uint64_t seed, double tol, Index nnz) {
  Timer t;
  std::mt19937_64 rng(seed);
  double err = 0.0;
  for (Index trial = 0; trial < trials; ++trial) {
    const BasePtr b = random_base(s, rng);
    const TangentVector v = random_tangent(b, rng);
    const std::vector<Matrix> dv = to_param(v, Param::first).cores();
    const SparseTensor z = random_sparse(s.n, nnz > 0 ? nnz : std::max<Index>(1, s.num_entries() / 3), rng);

    const std::vector<Matrix> g = gram_right_tilde_v(*b, dv);
    const VariationalInterfaces vi = variational_interfaces(v);
    const TTTensor tilde = tilde_tensor(s, b->f);
    for (Index k = 0; k + 1 < s.order(); ++k) {
      const Matrix ref = right_interface(tilde, k + 1).transpose() * vi.ge[u(k + 1)];
      err = std::max(err, rel(g[u(k)], ref, 1.0));
    }
    const kernels::Families fs = three_products_sparse(*b, dv, z);
    const kernels::Families fd = three_products_dense(*b, dv, z.to_dense());
    for (Index k = 0; k < s.order(); ++k) {
      err = std::max(err, rel(fs.A[u(k)], fd.A[u(k)], 1.0));
      err = std::max(err, rel(fs.B[u(k)], fd.B[u(k)], 1.0));
      err = std::max(err, rel(fs.C[u(k)], fd.C[u(k)], 1.0));
    }
  }
  return finish("sparse_vs_dense", err, tol, t);
}

CheckResult hessian_symmetry(const Shape& s, Index pairs, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const CompletionProblem problem = make_completion_instance(s, 3.0, rng());
  const BasePtr b = random_base(s, rng);
  const AmbientVector eg = problem.egrad(*b);
  const TangentOp h = [&](const TangentVector& v) { return problem.rhess(v, eg); };
  ConditionOptions opt;
  opt.seed = rng();
  opt.max_iter = std::min<Index>(s.manifold_dim(), 80);
  const ConditionEstimate ce = lanczos_condition(b, h, opt);
  const double hnorm = std::max(std::abs(ce.lambda_max), std::abs(ce.lambda_min));
  double err = 0.0;
  for (Index p = 0; p < pairs; ++p) {
    const TangentVector v = random_tangent(b, rng);
    const TangentVector w = random_tangent(b, rng);
    const double gap = std::abs(tangent_inner(h(v), w) - tangent_inner(v, h(w)));
    err = std::max(err, gap / (tangent_norm(v) * tangent_norm(w) * hnorm));
  }
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%ld pairs, ||H|| ~ %.3e", static_cast<long>(pairs), hnorm);
  return finish("hessian_symmetry", err, tol, t, buf);
}

CheckResult fd_hessian(const Shape& s, Index trials, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const CompletionProblem problem = make_completion_instance(s, 3.0, rng());
  const BasePtr b = random_base(s, rng);
  const AmbientVector eg = problem.egrad(*b);
  const TangentVector g0 = problem.rgrad(b);
  const GradFn grad = [&](const BasePtr& x) { return problem.rgrad(x); };
  double err = 0.0;
  for (Index trial = 0; trial < trials; ++trial) {
    const TangentVector v = random_tangent(b, rng);
    const TangentVector exact = problem.rhess(v, eg);
    double best = std::numeric_limits<double>::infinity();
    for (double scale : {1e2, 1e1, 1.0, 1e-1, 1e-2}) {
      const TangentVector fd = fd_hess_apply(v, grad, scale * default_fd_step(v), &g0);
      best = std::min(best, tangent_norm(fd - exact) / tangent_norm(exact));
    }
    err = std::max(err, best);
  }
  return finish("fd_hessian", err, tol, t);
}

CheckResult retraction_order(const Shape& s, std::uint64_t seed, double tol) {
  Timer t;
  std::mt19937_64 rng(seed);
  const BasePtr b = random_base(s, rng);
  const TangentVector v = random_tangent(b, rng);
  const DenseTensor x = tt_to_dense(b->x);
  const DenseTensor dv = densify(v);
  auto e = [&](double step) {
    DenseTensor r = tt_to_dense(retract(v, step).x);
    r -= x;
    r -= step * dv;
    return r.norm();
  };
  double ratio = 0.0;
  for (double step : {1e-2, 1e-3}) ratio = std::max(ratio, e(step / 2) / e(step));
  return finish("retraction_order", ratio, tol, t, "max e(t/2)/e(t)");
}

namespace {

struct GuardInstance {
  BasePtr b;
  TangentVector v;
  SparseTensor eg;
  SparseTensor data;
};

GuardInstance guard_instance(Index d, Index n, Index r, Index nnz, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Shape s = Shape::uniform_capped(d, n, r);
  GuardInstance g{make_base_point(random_tt(s, rng())), {}, random_sparse(s.n, nnz, rng), {}};
  g.v = random_tangent(g.b, rng);
  g.data = g.eg;
  return g;
}

}  // namespace

CheckResult dimensionality_guard(Index d, Index n, Index r, Index nnz, std::uint64_t seed, double time_limit_s) {
  const GuardInstance g = guard_instance(d, n, r, nnz, seed);
  const std::size_t before = dense_allocation_count();
  Timer t;
  const TangentVector h = hess_apply(g.v, g.eg, completion_ehess(g.v, g.data));
  const double secs = t.seconds();
  const std::size_t dense = dense_allocation_count() - before;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "d=%ld |Omega|=%ld, %zu dense allocations, |H V| = %.3e", static_cast<long>(d),
                static_cast<long>(nnz), dense, tangent_norm(h));
  CheckResult res{"dimensionality_guard", dense == 0 && secs < time_limit_s, secs, time_limit_s, secs, buf};
  return res;
}

double hess_apply_seconds(Index d, Index n, Index r, Index nnz, std::uint64_t seed, Index repeats) {
  const GuardInstance g = guard_instance(d, n, r, nnz, seed);
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < repeats; ++i) {
    Timer t;
    const TangentVector h = hess_apply(g.v, g.eg, completion_ehess(g.v, g.data));
    best = std::min(best, t.seconds());
    if (!std::isfinite(tangent_norm(h))) return std::numeric_limits<double>::infinity();
  }
  return best;
}

}  // namespace checks

CheckReport check_suite(const SuiteOptions& opt) {
  const bool full = opt.level == CheckLevel::full;
  const std::uint64_t sd = opt.seed;
  const Shape small = Shape::from_interior({2, 3, 2}, {2, 2});
  const Shape tiny = Shape::from_interior({2, 2, 2}, {2, 2});
  const Shape d4 = Shape::from_interior({3, 3, 2, 3}, {2, 3, 2});
  const Shape comp = Shape::from_interior({4, 4, 4, 4}, {2, 3, 2});

  CheckReport rep;
  auto& r = rep.results;
  r.push_back(checks::projector_assembly(small, sd));
  r.push_back(checks::interface_factorization(d4, sd + 1));
  r.push_back(checks::interface_orthonormality(d4, sd + 2));
  r.push_back(checks::param_conversion(d4, sd + 3, opt.corrupt_r));
  r.push_back(checks::tangent_reprojection(d4, sd + 4));
  r.push_back(checks::variational_derivative(d4, sd + 5));
  r.push_back(checks::left_projector_derivative(d4, sd + 6));
  r.push_back(checks::variational_cancellation(d4, sd + 7));
  r.push_back(checks::right_projector_derivative(d4, sd + 8));
  r.push_back(checks::weingarten_numeric(d4, full ? 20 : 4, sd + 9));
  r.push_back(checks::diagonal_terms(tiny, full ? 5 : 2, sd + 10));
  r.push_back(checks::cross_terms(d4, full ? 3 : 1, sd + 11));
  r.push_back(checks::sparse_vs_dense(d4, full ? 10 : 3, sd + 12));
  r.push_back(checks::hessian_symmetry(comp, full ? 100 : 20, sd + 13));
  r.push_back(checks::fd_hessian(comp, full ? 10 : 3, sd + 14));
  r.push_back(checks::retraction_order(d4, sd + 15));
  if (full) r.push_back(checks::dimensionality_guard(30, 4, 5, 10000, sd + 16, 10.0));
  return rep;
}

void print_report(std::ostream& os, const CheckReport& report) {
  char buf[256];
  for (const CheckResult& c : report.results) {
    std::snprintf(buf, sizeof(buf), "%-4s %-32s err %.3e  tol %.1e  %.2fs", c.passed ? "PASS" : "FAIL", c.name.c_str(),
                  c.max_error, c.tolerance, c.seconds);
    os << buf;
    if (!c.detail.empty()) os << "  (" << c.detail << ")";
    os << '\n';
  }
  os << (report.passed() ? "all checks passed" : "some checks FAILED") << '\n';
}

}  // namespace ttman
