#include <cstdio>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ttman/checks.hpp"
#include "ttman/experiment.hpp"
#include "ttman/lanczos.hpp"
#include "ttman/plot_data.hpp"
#include "ttman/sparse.hpp"
#include "ttman/tt_io.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kChecksFailed = 2;

int run_complete(const std::string& config, long jobs, const std::string& out) {
  const ttman::ExperimentConfig cfg = ttman::load_config(config);
  const ttman::ExperimentSummary s = ttman::run_experiment(cfg, jobs, out);
  const std::string dir = out.empty() ? cfg.output_dir : out;
  std::printf("manifold_dim %ld  |Omega| %ld  oversampling %.4f  sampling ratio %.4f\n",
              static_cast<long>(s.manifold_dim), static_cast<long>(s.omega_size), s.oversampling_achieved,
              s.sampling_ratio);
  for (const auto& t : s.trials) {
    std::printf("trial %ld  kappa(target) %.3e", static_cast<long>(t.trial), t.kappa_target);
    for (const auto& a : t.algos)
      std::printf("  %s:%s(%s)", a.algo.c_str(), a.converged ? "conv" : "noconv", a.stop_reason.c_str());
    std::printf("\n");
  }
  std::printf("wrote %s\n", dir.c_str());
  return kOk;
}

int run_check(const std::string& level, bool corrupt) {
  ttman::SuiteOptions opt;
  opt.level = ttman::parse_check_level(level);
  opt.corrupt_r = corrupt;
  const ttman::CheckReport rep = ttman::check_suite(opt);
  ttman::print_report(std::cout, rep);
  return rep.passed() ? kOk : kChecksFailed;
}

int run_condest(const std::string& tensor, const std::string& data, std::uint64_t seed) {
  const ttman::TTTensor x = ttman::load_ttz(tensor);
  const ttman::SparseTensor z = ttman::load_spt(data);
  if (z.dims() != x.shape().n) throw std::invalid_argument("condest: tensor and data dimensions differ");
  const ttman::CompletionProblem problem(z);
  ttman::ConditionOptions opt;
  opt.seed = seed;
  const ttman::ConditionEstimate ce = ttman::condition_estimate(problem, ttman::make_base_point(x), opt);
  nlohmann::ordered_json j;
  j["lambda_max"] = ce.lambda_max;
  j["lambda_min"] = ce.lambda_min;
  j["lambda_min_pos"] = ce.lambda_min_pos;
  j["kappa"] = ce.kappa;
  j["iterations"] = ce.iterations;
  j["converged"] = ce.converged;
  std::cout << j.dump(2) << '\n';
  return kOk;
}

int run_plotdata(const std::string& dir) {
  const ttman::PlotData p = ttman::emit_plot_data(dir);
  std::printf("series: cost %ld, test_cost %ld, grad_norm %ld\n", static_cast<long>(p.cost_series),
              static_cast<long>(p.test_cost_series), static_cast<long>(p.grad_norm_series));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Riemannian optimization on fixed-rank tensor trains"};
  app.require_subcommand(1);

  std::string config, out;
  long jobs = 1;
  auto* complete = app.add_subcommand("complete", "run a tensor-completion experiment");
  complete->add_option("--config", config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  complete->add_option("--jobs", jobs, "trials run concurrently")->check(CLI::PositiveNumber);
  complete->add_option("--out", out, "output directory (overrides output_dir)");

  std::string level = "fast";
  bool corrupt = false;
  auto* check = app.add_subcommand("check", "run the verification suite");
  check->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  check->add_flag("--corrupt-r", corrupt, "negate an R factor to exercise the failure path");

  std::string tensor, data;
  std::uint64_t seed = 0;
  auto* condest = app.add_subcommand("condest", "estimate the Hessian condition number at a point");
  condest->add_option("--tensor", tensor, "TTZ1 file")->required()->check(CLI::ExistingFile);
  condest->add_option("--data", data, "SPT1 file with the observed entries")->required()->check(CLI::ExistingFile);
  condest->add_option("--seed", seed, "Lanczos start vector seed");

  std::string run_dir;
  auto* plot = app.add_subcommand("plotdata", "write tidy plot data for a run directory");
  plot->add_option("run-dir", run_dir, "directory written by complete")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  try {
    if (*complete) return run_complete(config, jobs, out);
    if (*check) return run_check(level, corrupt);
    if (*condest) return run_condest(tensor, data, seed);
    return run_plotdata(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  }
}
