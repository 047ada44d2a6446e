#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "ttman/types.hpp"

namespace ttman {

struct RunRow {
  Index iter = 0;
  double time_s = 0.0;
  double cost = 0.0;
  /// NaN when the problem has no test set.
  double test_cost = 0.0;
  /// NaN when not computed.
  double grad_norm = 0.0;
  /// NaN for methods without a trust region.
  double radius = 0.0;
  std::string step_type;
};

/// Per-iteration telemetry of one (trial, algorithm) run.
struct RunLog {
  Index trial = 0;
  std::string algo;
  std::vector<RunRow> rows;

  void add(RunRow r);
  void write_csv(std::ostream& os, bool header = true) const;
  void save_csv(const std::filesystem::path& p) const;
};

inline constexpr const char* kRunLogHeader = "trial,algo,iter,time_s,cost,test_cost,grad_norm,radius,step_type";

/// Parses a CSV written by RunLog::write_csv (single trial/algo per file).
RunLog read_run_log(std::istream& is);
RunLog load_run_log(const std::filesystem::path& p);

/// Shortest round-trip decimal form; NaN prints as "nan".
std::string format_double(double v);

}  // namespace ttman
