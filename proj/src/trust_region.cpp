#include "ttman/trust_region.hpp"

#include <cmath>
#include <random>

namespace ttman {

void TrustRegionConfig::validate() const {
  if (!(initial_radius > 0) || !(initial_radius <= max_radius))
    throw std::invalid_argument("trust region: need 0 < initial_radius <= max_radius");
  if (!(rho_prime >= 0 && rho_prime < 0.25)) throw std::invalid_argument("trust region: need 0 <= rho' < 1/4");
  if (!(kappa > 0 && kappa < 1)) throw std::invalid_argument("trust region: kappa must lie in (0, 1)");
  if (!(theta > 0)) throw std::invalid_argument("trust region: theta must be positive");
  if (max_iters < 0 || max_inner < 0) throw std::invalid_argument("trust region: negative iteration cap");
}

const char* to_string(TcgStatus s) {
  switch (s) {
    case TcgStatus::converged:
      return "converged";
    case TcgStatus::boundary:
      return "boundary";
    case TcgStatus::negative_curvature:
      return "negative_curvature";
    case TcgStatus::max_inner:
      return "max_inner";
  }
  return "?";
}

TcgResult tcg_solve(const TangentOp& h, const TangentVector& g, double radius, double kappa, double theta,
                    Index max_inner) {
  TcgResult res;
  res.step = TangentVector::zero(g.base());
  res.hstep = TangentVector::zero(g.base());
  TangentVector r = to_param(g, Param::gauged);
  const double r0 = tangent_norm(r);
  if (r0 == 0.0) {
    res.status = TcgStatus::converged;
    return res;
  }
  const double stop = r0 * std::min(kappa, std::pow(r0, theta));
  TangentVector delta = -1.0 * r;
  double z_r = r0 * r0;
  double e_pe = 0.0, e_pd = 0.0, d_pd = z_r;
  const double r2 = radius * radius;

  for (Index j = 0; j < max_inner; ++j) {
    TangentVector hd = h(delta);
    if (gauge_residual(hd) > kGaugeTol) throw std::runtime_error("tcg_solve: Hessian output left the tangent space");
    const double d_hd = tangent_inner(delta, hd);
    const double alpha = z_r / d_hd;
    const double e_pe_new = e_pe + 2.0 * alpha * e_pd + alpha * alpha * d_pd;
    res.inner_iters = j + 1;
    if (d_hd <= 0 || e_pe_new >= r2) {
      const double tau = (-e_pd + std::sqrt(e_pd * e_pd + d_pd * (r2 - e_pe))) / d_pd;
      res.step.axpy(tau, delta);
      res.hstep.axpy(tau, hd);
      res.status = d_hd <= 0 ? TcgStatus::negative_curvature : TcgStatus::boundary;
      return res;
    }
    res.step.axpy(alpha, delta);
    res.hstep.axpy(alpha, hd);
    r.axpy(alpha, hd);
    e_pe = e_pe_new;
    if (tangent_norm(r) <= stop) {
      res.status = TcgStatus::converged;
      return res;
    }
    const double z_r_old = z_r;
    z_r = tangent_inner(r, r);
    const double beta = z_r / z_r_old;
    delta *= beta;
    delta -= r;
    e_pd = beta * (e_pd + alpha * d_pd);
    d_pd = z_r + beta * beta * d_pd;
  }
  res.status = TcgStatus::max_inner;
  return res;
}

OptResult rtr_minimize(const Problem& problem, const TTTensor& x0, const TrustRegionConfig& cfg, HessianMode mode,
                       Index trial) {
  cfg.validate();
  Stopwatch sw;
  std::mt19937_64 rng(cfg.perturb_seed);
  OptResult out;
  out.log.trial = trial;
  out.log.algo = mode == HessianMode::exact ? "rtr" : "fdtr";

  BasePtr x = make_base_point(x0);
  double f = problem.cost(*x);
  AmbientVector eg = problem.egrad(*x);
  TangentVector g = project(x, eg);
  double gn = tangent_norm(g);
  out.grad_tol = resolve_grad_tol(cfg.grad_tol, gn);
  double radius = cfg.initial_radius;
  const Index max_inner = cfg.max_inner > 0 ? cfg.max_inner : x->shape().manifold_dim();
  out.log.add(make_row(0, sw, problem, *x, f, gn, radius, "init"));

  auto grad_at = [&](const BasePtr& p) { return problem.rgrad(p); };
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
    TangentOp hop;
    if (mode == HessianMode::exact)
      hop = problem.hessian_operator(x, eg);
    else
      hop = [&](const TangentVector& v) {
        if (tangent_norm(v) == 0.0) return TangentVector::zero(x);
        return fd_hess_apply(v, grad_at, default_fd_step(v), &g);
      };

    TcgResult tcg = tcg_solve(hop, g, radius, cfg.kappa, cfg.theta, max_inner);

    RetractResult rr = retract(tcg.step, 1.0);
    if (rr.rank_deficient) {
      TangentVector pert = random_tangent(x, rng);
      const double scale = 1e-8 * std::max(tangent_norm(tcg.step), 1e-300) / std::max(tangent_norm(pert), 1e-300);
      tcg.step.axpy(scale, pert);
      rr = retract(tcg.step, 1.0);
      if (rr.rank_deficient) {
        out.stop_reason = "rank_deficient";
        break;
      }
    }
    BasePtr xn = make_base_point(rr.x);
    const double fn = problem.cost(*xn);

    double num = f - fn;
    double den = -(tangent_inner(g, tcg.step) + 0.5 * tangent_inner(tcg.step, tcg.hstep));
    const double reg = std::max(1.0, std::abs(f)) * std::numeric_limits<double>::epsilon() * 1e3;
    num += reg;
    den += reg;
    const double rho = num / den;
    const bool model_decreased = den >= 0;
    const bool hit_boundary = tcg.status == TcgStatus::boundary || tcg.status == TcgStatus::negative_curvature;

    if (!(rho >= 0.25) || !model_decreased)
      radius /= 4.0;
    else if (rho > 0.75 && hit_boundary)
      radius = std::min(2.0 * radius, cfg.max_radius);

    const bool accept = model_decreased && rho > cfg.rho_prime;
    if (accept) {
      x = xn;
      f = fn;
      eg = problem.egrad(*x);
      g = project(x, eg);
      gn = tangent_norm(g);
    }
    out.log.add(make_row(it, sw, problem, *x, f, gn, radius,
                         std::string(accept ? "accept:" : "reject:") + to_string(tcg.status)));
  }
  if (out.stop_reason == "max_iters" && gn < out.grad_tol) {
    out.converged = true;
    out.stop_reason = "grad_tol";
  }
  out.x = x->x;
  return out;
}

}  // namespace ttman
