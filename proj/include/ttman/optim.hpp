#pragma once

#include <algorithm>
#include <chrono>
#include <limits>
#include <string>

#include "ttman/problem.hpp"
#include "ttman/run_log.hpp"

namespace ttman {

/// Outcome shared by every solver.
struct OptResult {
  TTTensor x;
  RunLog log;
  bool converged = false;
  /// "grad_tol", "max_iters", "max_time", "rank_deficient", "line_search", ...
  std::string stop_reason;
  double grad_tol = 0.0;
};

/// grad_tol if positive, otherwise 1e-6 * max(1, initial gradient norm).
inline double resolve_grad_tol(double grad_tol, double g0) {
  return grad_tol > 0 ? grad_tol : 1e-6 * std::max(1.0, g0);
}

class Stopwatch {
 public:
  Stopwatch() : t0_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_;
};

inline double nan_value() { return std::numeric_limits<double>::quiet_NaN(); }

/// Telemetry row at a point; test cost comes from the problem if it has one.
inline RunRow make_row(Index iter, const Stopwatch& sw, const Problem& p, const BasePoint& x, double cost,
                       double grad_norm, double radius, std::string step_type) {
  return RunRow{iter, sw.seconds(), cost, p.test_cost(x).value_or(nan_value()), grad_norm, radius,
                std::move(step_type)};
}

}  // namespace ttman
