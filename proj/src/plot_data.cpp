#include "ttman/plot_data.hpp"

#include <algorithm>
#include <fstream>

namespace ttman {

namespace {

struct MetricFile {
  std::ofstream os;
  Index series = 0;

  explicit MetricFile(const std::filesystem::path& p) : os(p) {
    if (!os) throw std::runtime_error("cannot write " + p.string());
    os << "trial,algo,iter,time_s,value\n";
  }

  template <class Get>
  void add(const RunLog& log, Get get) {
    for (const RunRow& r : log.rows)
      os << log.trial << ',' << log.algo << ',' << r.iter << ',' << format_double(r.time_s) << ','
         << format_double(get(r)) << '\n';
    ++series;
  }
};

}  // namespace

PlotData emit_plot_data(const std::filesystem::path& run_dir) {
  const auto logs_dir = run_dir / "logs";
  if (!std::filesystem::is_directory(logs_dir)) throw std::runtime_error("no logs directory in " + run_dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(logs_dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  if (files.empty()) throw std::runtime_error("no run logs in " + logs_dir.string());
  std::sort(files.begin(), files.end());

  std::filesystem::create_directories(run_dir / "plot");
  MetricFile cost(run_dir / "plot" / "cost.csv");
  MetricFile test(run_dir / "plot" / "test_cost.csv");
  MetricFile grad(run_dir / "plot" / "grad_norm.csv");
  for (const auto& f : files) {
    RunLog log;
    try {
      log = load_run_log(f);
    } catch (const std::exception& e) {
      throw std::runtime_error("bad run log " + f.string() + ": " + e.what());
    }
    if (log.rows.empty()) throw std::runtime_error("empty run log " + f.string());
    cost.add(log, [](const RunRow& r) { return r.cost; });
    test.add(log, [](const RunRow& r) { return r.test_cost; });
    if (log.algo != "als") grad.add(log, [](const RunRow& r) { return r.grad_norm; });
  }
  return PlotData{cost.series, test.series, grad.series};
}

}  // namespace ttman
