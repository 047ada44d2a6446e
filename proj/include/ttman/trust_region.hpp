#pragma once

#include <cstdint>

#include "ttman/lanczos.hpp"
#include "ttman/optim.hpp"

namespace ttman {

struct TrustRegionConfig {
  double initial_radius = 100.0;
  double max_radius = 100.0 * 2048.0;
  /// Acceptance threshold rho'.
  double rho_prime = 0.1;
  double kappa = 0.1;
  double theta = 1.0;
  Index max_iters = 500;
  /// Inner iteration cap; 0 means the manifold dimension.
  Index max_inner = 0;
  /// <= 0 selects 1e-6 * max(1, initial gradient norm).
  double grad_tol = 0.0;
  double max_time_s = std::numeric_limits<double>::infinity();
  /// Seed for the perturbation applied after a rank-deficient retraction.
  std::uint64_t perturb_seed = 0;

  /// Throws std::invalid_argument on inconsistent values.
  void validate() const;
};

enum class HessianMode { exact, fd };
enum class TcgStatus { converged, boundary, negative_curvature, max_inner };

const char* to_string(TcgStatus s);

struct TcgResult {
  TangentVector step;
  /// H applied to step, accumulated during the iteration.
  TangentVector hstep;
  TcgStatus status = TcgStatus::max_inner;
  Index inner_iters = 0;
};

/// Steihaug-Toint truncated CG for min <g, s> + 1/2 <H s, s>, ||s|| <= radius.
/// Stops when ||r|| <= ||g|| min(kappa, ||g||^theta). Throws
/// std::runtime_error if H returns a vector violating the gauge conditions.
TcgResult tcg_solve(const TangentOp& h, const TangentVector& g, double radius, double kappa, double theta,
                    Index max_inner);

/// Riemannian trust-region method with the exact Hessian or the
/// finite-difference approximation (FD-TR).
OptResult rtr_minimize(const Problem& problem, const TTTensor& x0, const TrustRegionConfig& cfg,
                       HessianMode mode = HessianMode::exact, Index trial = 0);

}  // namespace ttman
