#include "ttman/rcg.hpp"

#include <cmath>

namespace ttman {

namespace {

struct LineSearch {
  bool ok = false;
  BasePtr x;
  double f = 0.0;
};

LineSearch armijo_search(const Problem& problem, const AmbientVector& eg, const TangentVector& eta, double f,
                         double slope, const RcgConfig& cfg) {
  const double curv = tangent_inner(eta, problem.rhess(eta, eg));
  double t = curv > 0 ? -slope / curv : 1.0 / std::max(tangent_norm(eta), 1e-300);
  for (Index h = 0; h <= cfg.max_halvings; ++h, t *= 0.5) {
    RetractResult rr = retract(eta, t);
    if (rr.rank_deficient) continue;
    BasePtr xt = make_base_point(rr.x);
    const double ft = problem.cost(*xt);
    if (ft <= f + cfg.armijo * t * slope) return {true, xt, ft};
  }
  return {};
}

}  // namespace

OptResult rcg_minimize(const Problem& problem, const TTTensor& x0, const RcgConfig& cfg, Index trial) {
  Stopwatch sw;
  OptResult out;
  out.log.trial = trial;
  out.log.algo = "rcg";

  BasePtr x = make_base_point(x0);
  double f = problem.cost(*x);
  AmbientVector eg = problem.egrad(*x);
  TangentVector g = project(x, eg);
  double gn = tangent_norm(g);
  out.grad_tol = resolve_grad_tol(cfg.grad_tol, gn);
  out.log.add(make_row(0, sw, problem, *x, f, gn, nan_value(), "init"));

  TangentVector eta = -1.0 * g;
  out.stop_reason = "max_iters";
  for (Index it = 1; it <= cfg.max_iters; ++it) {
    if (gn < out.grad_tol) {
      out.converged = true;
      out.stop_reason = "grad_tol";
      break;
    }
    if (sw.seconds() >= cfg.max_time_s) {
      out.stop_reason = "max_time";
      break;
    }
    std::string kind = "cg";
    double slope = tangent_inner(g, eta);
    if (cfg.force_sd || !(slope < 0)) {
      eta = -1.0 * g;
      slope = -gn * gn;
      kind = "sd";
    }
    LineSearch ls = armijo_search(problem, eg, eta, f, slope, cfg);
    if (!ls.ok && kind == "cg") {
      eta = -1.0 * g;
      slope = -gn * gn;
      kind = "sd";
      ls = armijo_search(problem, eg, eta, f, slope, cfg);
    }
    if (!ls.ok) {
      out.log.add(make_row(it, sw, problem, *x, f, gn, nan_value(), "line_search_failed"));
      out.stop_reason = "line_search";
      break;
    }
    const TangentVector g_old = transport(ls.x, g);
    const TangentVector eta_old = transport(ls.x, eta);
    const double gn_old = gn;
    x = ls.x;
    f = ls.f;
    eg = problem.egrad(*x);
    g = project(x, eg);
    gn = tangent_norm(g);
    double beta = 0.0;
    if (!cfg.force_sd) beta = std::max(0.0, tangent_inner(g, g - g_old) / (gn_old * gn_old));
    eta = -1.0 * g;
    eta.axpy(beta, eta_old);
    out.log.add(make_row(it, sw, problem, *x, f, gn, nan_value(), kind));
  }
  if (out.stop_reason == "max_iters" && gn < out.grad_tol) {
    out.converged = true;
    out.stop_reason = "grad_tol";
  }
  out.x = x->x;
  return out;
}

}  // namespace ttman
