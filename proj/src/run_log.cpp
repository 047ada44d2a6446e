#include "ttman/run_log.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace ttman {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void RunLog::add(RunRow r) {
  if (!rows.empty() && r.iter <= rows.back().iter) throw std::logic_error("RunLog: iterations must increase");
  if (r.grad_norm < 0) throw std::logic_error("RunLog: negative gradient norm");
  rows.push_back(std::move(r));
}

void RunLog::write_csv(std::ostream& os, bool header) const {
  if (header) os << kRunLogHeader << '\n';
  for (const RunRow& r : rows)
    os << trial << ',' << algo << ',' << r.iter << ',' << format_double(r.time_s) << ',' << format_double(r.cost) << ','
       << format_double(r.test_cost) << ',' << format_double(r.grad_norm) << ',' << format_double(r.radius) << ','
       << r.step_type << '\n';
}

void RunLog::save_csv(const std::filesystem::path& p) const {
  std::ofstream os(p);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  write_csv(os);
  if (!os) throw std::runtime_error("write failed for " + p.string());
}

namespace {

double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::runtime_error("bad number in run log: " + s);
  return v;
}

}  // namespace

RunLog read_run_log(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kRunLogHeader) throw std::runtime_error("run log: missing or wrong header");
  RunLog log;
  bool first = true;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 9) throw std::runtime_error("run log: expected 9 columns");
    const Index trial = std::stol(f[0]);
    if (first) {
      log.trial = trial;
      log.algo = f[1];
      first = false;
    } else if (trial != log.trial || f[1] != log.algo) {
      throw std::runtime_error("run log: mixed trials or algorithms in one file");
    }
    log.add(RunRow{std::stol(f[2]), parse_double(f[3]), parse_double(f[4]), parse_double(f[5]), parse_double(f[6]),
                   parse_double(f[7]), f[8]});
  }
  if (first) throw std::runtime_error("run log: no rows");
  return log;
}

RunLog load_run_log(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return read_run_log(is);
}

}  // namespace ttman
