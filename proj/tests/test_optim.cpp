#include <gtest/gtest.h>

#include "test_util.hpp"
#include "ttman/als.hpp"
#include "ttman/checks.hpp"
#include "ttman/completion.hpp"
#include "ttman/rcg.hpp"
#include "ttman/trust_region.hpp"

namespace ttman {
namespace {

SparseTensor fully_observed(const TTTensor& t) {
  std::vector<Index> flat;
  for (const auto& idx : testing::all_indices(t.shape().n)) flat.insert(flat.end(), idx.begin(), idx.end());
  return observe(t, std::make_shared<const IndexSet>(t.shape().n, flat));
}

/// Target plus a small perturbation, rounded back to the target ranks.
TTTensor near(const TTTensor& t, double eps, std::uint64_t seed) {
  const TTTensor noise = random_tt(t.shape(), seed);
  return tt_round(tt_add(t, tt_scale(noise, eps * t.norm() / noise.norm())), t.shape().interior_ranks());
}

TangentVector scaled_cores(const TangentVector& v, const std::vector<double>& c) {
  std::vector<Matrix> cores = v.cores();
  for (std::size_t k = 0; k < cores.size(); ++k) cores[k] *= c[k];
  return unchecked_tangent(v.base(), cores, v.param());
}

TEST(Tcg, IdentityGivesNewtonStep) {
  const BasePtr b = make_base_point(random_tt(Shape::from_interior({3, 3, 3}, {2, 2}), 1));
  std::mt19937_64 rng(2);
  const TangentVector g = random_tangent(b, rng);
  const TcgResult r = tcg_solve([](const TangentVector& v) { return v; }, g, 10 * tangent_norm(g), 0.1, 1.0, 50);
  EXPECT_EQ(r.status, TcgStatus::converged);
  EXPECT_LT(tangent_norm(r.step + g), 1e-14 * tangent_norm(g));
}

TEST(Tcg, NegativeCurvatureHitsBoundary) {
  const BasePtr b = make_base_point(random_tt(Shape::from_interior({3, 3, 3}, {2, 2}), 3));
  std::mt19937_64 rng(4);
  const TangentVector g = random_tangent(b, rng);
  const TcgResult r = tcg_solve([](const TangentVector& v) { return -1.0 * v; }, g, 0.5, 0.1, 1.0, 50);
  EXPECT_EQ(r.status, TcgStatus::negative_curvature);
  EXPECT_NEAR(tangent_norm(r.step), 0.5, 1e-12);
  EXPECT_LT(tangent_inner(r.step, g), 0.0);
}

TEST(Tcg, ResidualToleranceOnSpdOperator) {
  const BasePtr b = make_base_point(random_tt(Shape::from_interior({3, 4, 3, 4}, {2, 3, 2}), 5));
  std::mt19937_64 rng(6);
  for (double scale : {1e-3, 1.0, 10.0}) {
    TangentVector g = random_tangent(b, rng);
    g *= scale / tangent_norm(g);
    const std::vector<double> c{1.0, 3.0, 0.5, 7.0};
    const TangentOp h = [&](const TangentVector& v) { return scaled_cores(v, c); };
    const TcgResult r = tcg_solve(h, g, 1e6, 0.1, 1.0, 100);
    EXPECT_EQ(r.status, TcgStatus::converged);
    const double gn = tangent_norm(g);
    EXPECT_LE(tangent_norm(h(r.step) + g), gn * std::min(0.1, gn) * (1 + 1e-10));
    EXPECT_LT(tangent_norm(r.hstep - h(r.step)), 1e-12 * tangent_norm(r.hstep));
  }
}

TEST(Tcg, RejectsGaugeViolatingOperator) {
  const BasePtr b = make_base_point(random_tt(Shape::from_interior({3, 3, 3}, {2, 2}), 7));
  std::mt19937_64 rng(8);
  const TangentVector g = random_tangent(b, rng);
  const TangentOp bad = [&](const TangentVector& v) {
    std::vector<Matrix> c = v.cores();
    c[0] += b->U(0);
    return unchecked_tangent(v.base(), c, v.param());
  };
  EXPECT_THROW(tcg_solve(bad, g, 1.0, 0.1, 1.0, 10), std::runtime_error);
}

TEST(TrustRegionConfig, Validation) {
  TrustRegionConfig c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.max_radius, 100.0 * 2048.0);
  c.initial_radius = 2 * c.max_radius;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.rho_prime = 0.25;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = {};
  c.initial_radius = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Rtr, FullyObservedConvergesFast) {
  const Shape s = Shape::from_interior({3, 3, 3}, {2, 2});
  const TTTensor t = random_tt(s, 9);
  const CompletionProblem p(fully_observed(t));
  TrustRegionConfig cfg;
  cfg.max_iters = 30;
  cfg.grad_tol = 1e-9;
  const OptResult r = rtr_minimize(p, near(t, 0.3, 10), cfg);
  EXPECT_TRUE(r.converged) << r.stop_reason;
  EXPECT_LT(r.log.rows.back().grad_norm, 1e-9);
  EXPECT_LE(r.log.rows.back().iter, 30);
}

TEST(Rtr, LogInvariantsAndRadiusRule) {
  const Shape s = Shape::from_interior({4, 4, 4, 4}, {2, 3, 2});
  const CompletionProblem p = make_completion_instance(s, 3.0, 11);
  TrustRegionConfig cfg;
  cfg.max_iters = 60;
  cfg.initial_radius = 1.0;
  const OptResult r = rtr_minimize(p, random_tt(s, 12), cfg);
  const auto& rows = r.log.rows;
  ASSERT_GT(rows.size(), 2u);
  bool saw_reject = false;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].iter, rows[i - 1].iter + 1);
    const double prev = rows[i - 1].radius, cur = rows[i].radius;
    const bool ok = cur == prev || cur == prev / 4 || cur == std::min(2 * prev, cfg.max_radius);
    EXPECT_TRUE(ok) << i;
    if (rows[i].step_type.rfind("reject", 0) == 0) {
      saw_reject = true;
      EXPECT_EQ(rows[i].cost, rows[i - 1].cost);
      EXPECT_EQ(cur, prev / 4);
    } else {
      EXPECT_LE(rows[i].cost, rows[i - 1].cost);
    }
  }
  (void)saw_reject;
  EXPECT_EQ(tt_rank(tt_to_dense(r.x)), s.interior_ranks());
  const BasePtr xb = make_base_point(r.x);
  for (Index k = 0; k + 1 < s.order(); ++k) {
    const Matrix& u = xb->U(k);
    EXPECT_LT((u.transpose() * u - Matrix::Identity(u.cols(), u.cols())).norm(), 1e-12);
  }
}

TEST(Rtr, SuperlinearTail) {
  const Shape s = Shape::from_interior({4, 4, 4, 4}, {2, 3, 2});
  int ok = 0;
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const CompletionProblem p = make_completion_instance(s, 5.0, 100 + seed);
    TrustRegionConfig cfg;
    cfg.max_iters = 200;
    const OptResult r = rtr_minimize(p, random_tt(s, 200 + seed), cfg);
    if (r.converged && testing::superlinear_tail(r.log)) ++ok;
  }
  EXPECT_GE(ok, 2);
}

TEST(Rtr, ExactAndFdModesAgreeEarly) {
  const Shape s = Shape::from_interior({4, 4, 4}, {2, 2});
  const CompletionProblem p = make_completion_instance(s, 2.0, 13);
  TrustRegionConfig cfg;
  cfg.max_iters = 5;
  const TTTensor x0 = random_tt(s, 14);
  const OptResult a = rtr_minimize(p, x0, cfg, HessianMode::exact);
  const OptResult b = rtr_minimize(p, x0, cfg, HessianMode::fd);
  EXPECT_EQ(b.log.algo, "fdtr");
  ASSERT_EQ(a.log.rows.size(), b.log.rows.size());
  for (std::size_t i = 0; i < a.log.rows.size(); ++i) {
    EXPECT_EQ(a.log.rows[i].step_type, b.log.rows[i].step_type);
    EXPECT_NEAR(a.log.rows[i].cost, b.log.rows[i].cost, 1e-4 * std::max(1.0, a.log.rows[i].cost));
  }
  EXPECT_LT(testing::rel(tt_to_dense(b.x), tt_to_dense(a.x)), 1e-4);
}

TEST(Rtr, Deterministic) {
  const Shape s = Shape::from_interior({4, 4, 4}, {2, 2});
  const CompletionProblem p = make_completion_instance(s, 2.0, 15);
  TrustRegionConfig cfg;
  cfg.max_iters = 20;
  const TTTensor x0 = random_tt(s, 16);
  const OptResult a = rtr_minimize(p, x0, cfg), b = rtr_minimize(p, x0, cfg);
  ASSERT_EQ(a.log.rows.size(), b.log.rows.size());
  for (std::size_t i = 0; i < a.log.rows.size(); ++i) {
    EXPECT_EQ(a.log.rows[i].cost, b.log.rows[i].cost);
    EXPECT_EQ(a.log.rows[i].grad_norm, b.log.rows[i].grad_norm);
  }
}

TEST(Rcg, MonotoneAndConverges) {
  const Shape s = Shape::from_interior({3, 3, 3}, {2, 2});
  const TTTensor t = random_tt(s, 17);
  const CompletionProblem p(fully_observed(t));
  RcgConfig cfg;
  cfg.max_iters = 500;
  cfg.grad_tol = 1e-6;
  const OptResult r = rcg_minimize(p, near(t, 0.3, 18), cfg);
  EXPECT_TRUE(r.converged) << r.stop_reason;
  for (std::size_t i = 1; i < r.log.rows.size(); ++i) EXPECT_LE(r.log.rows[i].cost, r.log.rows[i - 1].cost);
}

TEST(Rcg, ForcedSteepestDescentMatchesReference) {
  const Shape s = Shape::from_interior({4, 4, 4}, {2, 2});
  const CompletionProblem p = make_completion_instance(s, 2.0, 19);
  RcgConfig cfg;
  cfg.max_iters = 4;
  cfg.force_sd = true;
  const TTTensor x0 = random_tt(s, 20);
  const OptResult r = rcg_minimize(p, x0, cfg);
  for (std::size_t i = 1; i < r.log.rows.size(); ++i) EXPECT_EQ(r.log.rows[i].step_type, "sd");

  // Reference: Armijo backtracking along -grad from the model minimizer.
  BasePtr x = make_base_point(x0);
  for (std::size_t i = 1; i < r.log.rows.size(); ++i) {
    const auto eg = p.egrad(*x);
    const TangentVector g = project(x, eg);
    const TangentVector eta = -1.0 * g;
    const double slope = -tangent_inner(g, g), f = p.cost(*x);
    double t = -slope / tangent_inner(eta, p.rhess(eta, eg));
    BasePtr xt;
    for (int h = 0; h <= 50; ++h, t *= 0.5) {
      xt = make_base_point(retract(eta, t).x);
      if (p.cost(*xt) <= f + 1e-4 * t * slope) break;
    }
    x = xt;
    EXPECT_NEAR(p.cost(*x), r.log.rows[i].cost, 1e-12 * std::max(1.0, r.log.rows[i].cost)) << i;
  }
}

TEST(Als, CoreUpdatesNeverIncreaseCost) {
  const Shape s = Shape::from_interior({4, 4, 4, 4}, {2, 3, 2});
  const CompletionProblem p = make_completion_instance(s, 3.0, 21);
  AlsConfig cfg;
  cfg.max_sweeps = 3;
  double last = std::numeric_limits<double>::infinity();
  int updates = 0;
  cfg.on_core_update = [&](const TTTensor& x, Index) {
    const double f = completion_cost(x, p.train());
    EXPECT_LE(f, last * (1 + 1e-12) + 1e-14);
    last = f;
    ++updates;
  };
  const AlsResult r = als_minimize(p, random_tt(s, 22), cfg);
  EXPECT_EQ(r.log.algo, "als");
  EXPECT_GT(updates, 0);
}

TEST(Als, RecoversFullyObserved) {
  const Shape s = Shape::from_interior({3, 3, 3}, {2, 2});
  const TTTensor t = random_tt(s, 23);
  const CompletionProblem p(fully_observed(t));
  AlsConfig cfg;
  cfg.max_sweeps = 10;
  cfg.grad_tol = 1e-12;
  const AlsResult r = als_minimize(p, random_tt(s, 24), cfg);
  EXPECT_LT(testing::rel(tt_to_dense(r.x), tt_to_dense(t)), 1e-8);
}

TEST(Als, DivergenceGuardStops) {
  // Skewed sampling at low oversampling: rarely observed slices blow up
  // while the gradient norm falls below tolerance after one sweep.
  const Shape s = Shape::from_interior(Extents(9, 4), {2, 2, 3, 3, 3, 3, 2, 2});
  const std::vector<double> p{50.0 / 65, 12.0 / 65, 2.0 / 65, 1.0 / 65};
  const Index m = static_cast<Index>(std::llround(5.1 * s.manifold_dim()));
  const TTTensor target = random_tt(s, 31);
  const auto omega = std::make_shared<const IndexSet>(sample_indices(make_sampling_spec(s.n, p, m, 32), s.n));
  const CompletionProblem prob(observe(target, omega));
  const TTTensor x0 = random_tt(s, 33);
  AlsConfig cfg;
  cfg.max_sweeps = 20;
  const AlsResult r = als_minimize(prob, x0, cfg);
  EXPECT_FALSE(r.converged);
  EXPECT_EQ(r.stop_reason, "diverged");
  const double cap = kAlsDivergence * std::max({1.0, x0.norm(), prob.train().norm()});
  EXPECT_GT(r.x.norm(), cap);
}

}  // namespace
}  // namespace ttman
