#pragma once

#include <filesystem>

#include "ttman/run_log.hpp"

namespace ttman {

struct PlotData {
  /// Number of (trial, algorithm) series per metric file.
  Index cost_series = 0;
  Index test_cost_series = 0;
  Index grad_norm_series = 0;
};

/// Reads run_dir/logs/*.csv and writes run_dir/plot/{cost,test_cost,
/// grad_norm}.csv with columns trial,algo,iter,time_s,value. ALS has no
/// gradient-norm series. Throws std::runtime_error on missing or malformed
/// logs.
PlotData emit_plot_data(const std::filesystem::path& run_dir);

}  // namespace ttman
