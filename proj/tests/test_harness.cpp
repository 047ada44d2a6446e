#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include <gtest/gtest.h>

#include "json.hpp"
#include "ttman/checks.hpp"
#include "ttman/experiment.hpp"
#include "ttman/plot_data.hpp"
#include "ttman/tt_io.hpp"

namespace fs = std::filesystem;

namespace ttman {
namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("ttman_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

/// Log text with the time_s column removed.
std::string without_time(const fs::path& p) {
  std::istringstream is(slurp(p));
  std::string line, out;
  while (std::getline(is, line)) {
    std::vector<std::string> cols;
    std::stringstream ls(line);
    for (std::string c; std::getline(ls, c, ',');) cols.push_back(c);
    cols.erase(cols.begin() + 3);
    for (const auto& c : cols) out += c + ",";
    out += "\n";
  }
  return out;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(TTMAN_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kTiny = R"({"n": [3, 3, 3, 3], "ranks": [2, 2, 2], "oversampling": 2,
  "algorithms": ["rtr", "fdtr", "rcg", "als"], "trials": 3, "seed": 5, "max_iters": 40, "max_time_s": 30})";

TEST(Config, BroadcastAndDefaults) {
  const ExperimentConfig c =
      parse_config(R"({"d": 4, "n": 3, "ranks": 2, "oversampling": 2.5, "algorithms": ["rtr"]})");
  EXPECT_EQ(c.n, (Extents{3, 3, 3, 3}));
  EXPECT_EQ(c.ranks, (Extents{2, 2, 2}));
  ASSERT_EQ(c.p.size(), 4u);
  EXPECT_DOUBLE_EQ(c.p[2][1], 1.0 / 3.0);
  EXPECT_EQ(c.omega_size(), static_cast<Index>(std::llround(2.5 * c.shape().manifold_dim())));
  EXPECT_DOUBLE_EQ(c.trust_region.initial_radius, 100.0);
  EXPECT_DOUBLE_EQ(c.trust_region.max_radius, 100.0 * 2048.0);

  const ExperimentConfig s = parse_config(
      R"({"n": [4, 4, 4], "ranks": [2, 2], "p": [0.5, 0.25, 0.125, 0.125], "oversampling": 1,
          "algorithms": ["als"], "grad_tol": 1e-7, "trust_region": {"initial_radius": 3}})");
  EXPECT_EQ(s.p[1], (std::vector<double>{0.5, 0.25, 0.125, 0.125}));
  EXPECT_DOUBLE_EQ(s.trust_region.grad_tol, 1e-7);
  EXPECT_DOUBLE_EQ(s.trust_region.initial_radius, 3.0);
  const ExperimentConfig back = parse_config(config_to_json(s));
  EXPECT_EQ(back.n, s.n);
  EXPECT_EQ(back.p, s.p);
  EXPECT_EQ(back.algorithms, s.algorithms);
}

TEST(Config, Rejections) {
  const std::vector<std::string> bad{
      R"({"n": [3, 3], "ranks": [2], "oversampling": 1, "algorithms": ["rtr"], "colour": 1})",
      R"({"n": [3, 3], "ranks": [2], "oversampling": 1, "algorithms": []})",
      R"({"n": [3, 3], "ranks": [2], "oversampling": 1, "algorithms": ["newton"]})",
      R"({"n": [3, 3], "ranks": [2], "oversampling": 1, "algorithms": ["rtr"], "trials": 0})",
      R"({"n": [3, 3], "ranks": [5], "oversampling": 1, "algorithms": ["rtr"]})",
      R"({"n": [3, 3], "ranks": [2, 2], "oversampling": 1, "algorithms": ["rtr"]})",
      R"({"n": [3, 3], "ranks": [2], "oversampling": 100, "algorithms": ["rtr"]})",
      R"({"n": [3, 3], "ranks": [2], "oversampling": 1, "algorithms": ["rtr"], "p": [0.5, 0.5]})",
      R"({"n": [3, 3], "ranks": [2], "oversampling": 1, "algorithms": ["rtr"],
          "trust_region": {"rho_prime": 0.5}})",
      R"({"n": 3, "ranks": [2], "oversampling": 1, "algorithms": ["rtr"]})",
      R"([1, 2])",
      R"({"n": [3, 3)"};
  for (const auto& text : bad) EXPECT_THROW(parse_config(text), std::invalid_argument) << text;
}

TEST(Seeds, DeterministicAndDistinct) {
  const TrialSeeds a = trial_seeds(7, 0), b = trial_seeds(7, 0), c = trial_seeds(7, 1);
  EXPECT_EQ(a.target, b.target);
  EXPECT_EQ(a.perturb, b.perturb);
  EXPECT_NE(a.target, c.target);
  EXPECT_NE(a.target, a.train);
  EXPECT_NE(a.train, a.test);
  EXPECT_NE(a.init, a.perturb);
}

TEST(Experiment, SingleTrialSingleCsv) {
  ExperimentConfig c = parse_config(kTiny);
  c.trials = 1;
  c.algorithms = {"rtr"};
  const fs::path dir = scratch("single");
  run_experiment(c, 1, dir);
  std::vector<fs::path> logs;
  for (const auto& e : fs::directory_iterator(dir / "logs")) logs.push_back(e.path());
  ASSERT_EQ(logs.size(), 1u);
  EXPECT_EQ(logs[0].filename(), "trial_000_rtr.csv");
  const RunLog log = load_run_log(logs[0]);
  for (std::size_t i = 1; i < log.rows.size(); ++i) EXPECT_GE(log.rows[i].time_s, log.rows[i - 1].time_s);
  EXPECT_TRUE(fs::exists(dir / "summary.json"));
}

TEST(Experiment, ReproducibleAcrossRunsAndJobs) {
  const ExperimentConfig c = parse_config(kTiny);
  const fs::path a = scratch("rep_a"), b = scratch("rep_b"), j = scratch("rep_jobs");
  run_experiment(c, 1, a);
  run_experiment(c, 1, b);
  run_experiment(c, 3, j);
  Index files = 0;
  for (const auto& e : fs::directory_iterator(a / "logs")) {
    const fs::path name = e.path().filename();
    EXPECT_EQ(without_time(e.path()), without_time(b / "logs" / name)) << name;
    EXPECT_EQ(without_time(e.path()), without_time(j / "logs" / name)) << name;
    ++files;
  }
  EXPECT_EQ(files, 12);
  EXPECT_EQ(slurp(a / "summary.json"), slurp(b / "summary.json"));
  EXPECT_EQ(slurp(a / "summary.json"), slurp(j / "summary.json"));
}

TEST(Experiment, SummaryContents) {
  const ExperimentConfig c = parse_config(kTiny);
  const fs::path dir = scratch("summary");
  const ExperimentSummary s = run_experiment(c, 1, dir);
  EXPECT_EQ(s.manifold_dim, c.shape().manifold_dim());
  EXPECT_EQ(s.omega_size, c.omega_size());
  EXPECT_DOUBLE_EQ(s.sampling_ratio, static_cast<double>(c.omega_size()) / 81.0);
  const auto j = nlohmann::json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(j["manifold_dim"].get<Index>(), s.manifold_dim);
  ASSERT_EQ(j["trials"].size(), 3u);
  for (const auto& t : j["trials"]) {
    EXPECT_TRUE(t.contains("kappa_target"));
    for (const char* a : {"rtr", "fdtr", "rcg", "als"}) {
      EXPECT_TRUE(t["algorithms"].contains(a));
      EXPECT_TRUE(t["algorithms"][a].contains("final_cost"));
    }
  }
  EXPECT_TRUE(j["converged_trials"].contains("rtr"));
}

TEST(Experiment, LargeUniformConfigDerivedSizes) {
  const ExperimentConfig c = load_config(fs::path(TTMAN_SOURCE_DIR) / "configs" / "uniform_d9.json");
  EXPECT_EQ(c.shape().manifold_dim(), 1276);
  EXPECT_EQ(c.omega_size(), 26158);
}

TEST(PlotData, CountsAndLengths) {
  ExperimentConfig c = parse_config(kTiny);
  const fs::path dir = scratch("plot");
  run_experiment(c, 1, dir);
  const PlotData p = emit_plot_data(dir);
  EXPECT_EQ(p.cost_series, 12);
  EXPECT_EQ(p.test_cost_series, 12);
  EXPECT_EQ(p.grad_norm_series, 9);

  std::map<std::pair<std::string, std::string>, Index> rows;
  std::istringstream is(slurp(dir / "plot" / "cost.csv"));
  std::string line;
  std::getline(is, line);
  EXPECT_EQ(line, "trial,algo,iter,time_s,value");
  while (std::getline(is, line)) {
    std::stringstream ls(line);
    std::string trial, algo;
    std::getline(ls, trial, ',');
    std::getline(ls, algo, ',');
    ++rows[{trial, algo}];
  }
  EXPECT_EQ(rows.size(), 12u);
  for (const auto& [key, n] : rows) {
    char name[64];
    std::snprintf(name, sizeof name, "trial_%03d_%s.csv", std::stoi(key.first), key.second.c_str());
    EXPECT_EQ(n, static_cast<Index>(load_run_log(dir / "logs" / name).rows.size())) << name;
  }
  EXPECT_EQ(slurp(dir / "plot" / "grad_norm.csv").find(",als,"), std::string::npos);
}

TEST(PlotData, MissingLogsThrow) {
  const fs::path dir = scratch("plot_missing");
  EXPECT_THROW(emit_plot_data(dir), std::runtime_error);
  fs::create_directories(dir / "logs");
  std::ofstream(dir / "logs" / "trial_000_rtr.csv") << "trial,algo\n0,rtr,";
  EXPECT_THROW(emit_plot_data(dir), std::runtime_error);
}

TEST(CheckSuite, FastPassesAndMutationFails) {
  const CheckReport ok = check_suite({});
  EXPECT_TRUE(ok.passed());
  for (const CheckResult& r : ok.results) EXPECT_TRUE(r.passed) << r.name << " " << r.max_error;
  SuiteOptions bad;
  bad.corrupt_r = true;
  const CheckReport rep = check_suite(bad);
  EXPECT_FALSE(rep.passed());
  for (const CheckResult& r : rep.results)
    if (r.name.find("param_conversion") != std::string::npos) EXPECT_FALSE(r.passed);
  EXPECT_THROW(parse_check_level("medium"), std::invalid_argument);
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch("cli");
  EXPECT_EQ(run_cli("check --level fast"), 0);
  EXPECT_EQ(run_cli("check --level fast --corrupt-r"), 2);
  EXPECT_EQ(run_cli("check --level nonsense"), 1);
  EXPECT_EQ(run_cli(""), 1);
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("complete --config /nonexistent.json"), 1);
  std::ofstream(dir / "bad.json") << R"({"n": [3, 3], "ranks": [2], "oversampling": 1, "algorithms": ["x"]})";
  EXPECT_EQ(run_cli("complete --config " + (dir / "bad.json").string()), 1);

  ExperimentConfig c = parse_config(kTiny);
  c.trials = 2;
  c.algorithms = {"rtr", "als"};
  std::ofstream(dir / "ok.json") << config_to_json(c);
  EXPECT_EQ(run_cli("complete --config " + (dir / "ok.json").string() + " --out " + (dir / "run").string()), 0);
  EXPECT_EQ(run_cli("plotdata " + (dir / "run").string()), 0);
  EXPECT_TRUE(fs::exists(dir / "run" / "plot" / "grad_norm.csv"));
  EXPECT_EQ(run_cli("plotdata " + (dir / "nothing").string()), 1);

  const Shape s = c.shape();
  save_ttz(dir / "x.ttz", random_tt(s, 1));
  save_spt(dir / "z.spt", SparseTensor(s.n, {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2}, {1.0, 2.0, 3.0}));
  EXPECT_EQ(run_cli("condest --tensor " + (dir / "x.ttz").string() + " --data " + (dir / "z.spt").string()), 0);
  save_spt(dir / "w.spt", SparseTensor({3, 3}, {0, 0}, {1.0}));
  EXPECT_EQ(run_cli("condest --tensor " + (dir / "x.ttz").string() + " --data " + (dir / "w.spt").string()), 1);
}

}  // namespace
}  // namespace ttman
