#pragma once

#include "ttman/optim.hpp"

namespace ttman {

struct RcgConfig {
  Index max_iters = 1000;
  double grad_tol = 0.0;
  double max_time_s = std::numeric_limits<double>::infinity();
  /// Armijo sufficient-decrease constant.
  double armijo = 1e-4;
  Index max_halvings = 50;
  /// beta = 0 every iteration (plain steepest descent).
  bool force_sd = false;
};

/// Riemannian nonlinear CG: Polak-Ribiere+ beta, projection transport,
/// Armijo backtracking along the retraction starting from the step that
/// minimizes the quadratic model along the search direction. If 50 halvings
/// fail the iteration falls back to steepest descent; if that fails too the
/// run stops with reason "line_search".
OptResult rcg_minimize(const Problem& problem, const TTTensor& x0, const RcgConfig& cfg, Index trial = 0);

}  // namespace ttman
