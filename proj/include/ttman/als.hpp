#pragma once

#include <functional>

#include "ttman/completion.hpp"
#include "ttman/optim.hpp"

namespace ttman {

/// ALS stops with "diverged" once ||X|| exceeds this factor times
/// max(1, ||X0||, ||data||). Unobserved entries can grow without bound when
/// some slices are sampled rarely, and the Riemannian gradient can then drop
/// below tolerance while the cost stays large.
inline constexpr double kAlsDivergence = 1e6;

struct AlsConfig {
  /// One sweep updates cores 0..d-1 and then d-2..0.
  Index max_sweeps = 100;
  double grad_tol = 0.0;
  double max_time_s = std::numeric_limits<double>::infinity();
  /// Called after every single core update with the current tensor and the
  /// index of the updated core.
  std::function<void(const TTTensor&, Index)> on_core_update;
};

struct AlsResult : OptResult {
  /// Slices whose least-squares problem was rank deficient (solved with a
  /// 1e-12 ridge) or had no observations (left unchanged).
  Index ridge_warnings = 0;
};

/// Alternating least squares for tensor completion. Each core update solves
/// the restricted linear least-squares problem slice by slice with a QR
/// factorization of the design matrix built from interface row products;
/// the orthogonality center moves with the sweep. The gradient norm is
/// logged for reference only.
AlsResult als_minimize(const CompletionProblem& problem, const TTTensor& x0, const AlsConfig& cfg, Index trial = 0);

}  // namespace ttman
