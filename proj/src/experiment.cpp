#include "ttman/experiment.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <omp.h>

#include "json.hpp"
#include "ttman/als.hpp"
#include "ttman/completion.hpp"
#include "ttman/lanczos.hpp"
#include "ttman/rcg.hpp"

namespace ttman {

using json = nlohmann::ordered_json;

namespace {

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

const std::set<std::string> kAlgorithms = {"rtr", "fdtr", "rcg", "als"};

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!allowed.count(it.key())) throw std::invalid_argument("config: unknown key '" + it.key() + "' in " + where);
}

Extents broadcast(const json& v, std::size_t len, const std::string& name) {
  if (v.is_number_integer()) return Extents(len, v.get<Index>());
  if (!v.is_array()) throw std::invalid_argument("config: '" + name + "' must be an integer or a list");
  Extents e = v.get<Extents>();
  if (e.size() != len) throw std::invalid_argument("config: '" + name + "' has the wrong length");
  return e;
}

AlgoOutcome outcome_of(const std::string& algo, const OptResult& r) {
  const RunRow& last = r.log.rows.back();
  return AlgoOutcome{algo, last.cost, last.test_cost, last.grad_norm, last.iter, r.converged, r.stop_reason};
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

Index ExperimentConfig::omega_size() const {
  return static_cast<Index>(std::llround(oversampling * static_cast<double>(shape().manifold_dim())));
}

void ExperimentConfig::validate() const {
  const Shape s = shape();
  s.require_feasible();
  if (s.manifold_dim() <= 0) throw std::invalid_argument("config: manifold dimension must be positive");
  if (p.size() != n.size()) throw std::invalid_argument("config: need one distribution per mode");
  for (std::size_t k = 0; k < n.size(); ++k)
    if (static_cast<Index>(p[k].size()) != n[k]) throw std::invalid_argument("config: distribution length != n");
  if (!(oversampling > 0)) throw std::invalid_argument("config: oversampling must be positive");
  if (omega_size() < 1) throw std::invalid_argument("config: derived |Omega| must be at least 1");
  if (algorithms.empty()) throw std::invalid_argument("config: at least one algorithm is required");
  std::set<std::string> seen;
  for (const auto& a : algorithms) {
    if (!kAlgorithms.count(a)) throw std::invalid_argument("config: unknown algorithm '" + a + "'");
    if (!seen.insert(a).second) throw std::invalid_argument("config: duplicate algorithm '" + a + "'");
  }
  if (trials < 1) throw std::invalid_argument("config: trials must be >= 1");
  if (max_iters < 1) throw std::invalid_argument("config: max_iters must be >= 1");
  if (!(max_time_s > 0)) throw std::invalid_argument("config: max_time_s must be positive");
  trust_region.validate();
  Extents support(n.size());
  for (std::size_t k = 0; k < n.size(); ++k)
    for (double v : p[k]) support[k] += v > 0 ? 1 : 0;
  if (omega_size() > checked_product(support))
    throw std::invalid_argument("config: |Omega| exceeds the support of the sampling distribution");
}

ExperimentConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: top level must be an object");
  reject_unknown(j,
                 {"d", "n", "ranks", "p", "oversampling", "algorithms", "trials", "seed", "trust_region", "max_time_s",
                  "max_iters", "grad_tol", "output_dir"},
                 "config");
  try {
    ExperimentConfig c;
    if (!j.contains("n") || !j.contains("ranks") || !j.contains("oversampling") || !j.contains("algorithms"))
      throw std::invalid_argument("config: 'n', 'ranks', 'oversampling' and 'algorithms' are required");
    std::size_t d;
    if (j.contains("d"))
      d = j["d"].get<std::size_t>();
    else if (j["n"].is_array())
      d = j["n"].size();
    else
      throw std::invalid_argument("config: 'd' is required when 'n' is a scalar");
    if (d < 2) throw std::invalid_argument("config: d must be at least 2");
    c.n = broadcast(j["n"], d, "n");
    c.ranks = broadcast(j["ranks"], d - 1, "ranks");
    if (!j.contains("p")) {
      for (Index nk : c.n) c.p.push_back(uniform_distribution(nk));
    } else if (j["p"].is_array() && !j["p"].empty() && j["p"][0].is_array()) {
      c.p = j["p"].get<std::vector<std::vector<double>>>();
    } else {
      c.p.assign(d, j["p"].get<std::vector<double>>());
    }
    c.oversampling = j["oversampling"].get<double>();
    c.algorithms = j["algorithms"].get<std::vector<std::string>>();
    c.trials = j.value("trials", Index{1});
    c.seed = j.value("seed", std::uint64_t{0});
    c.max_time_s = j.value("max_time_s", 60.0);
    c.max_iters = j.value("max_iters", Index{500});
    c.output_dir = j.value("output_dir", std::string("run"));
    c.trust_region.grad_tol = j.value("grad_tol", 0.0);
    if (j.contains("trust_region")) {
      const json& t = j["trust_region"];
      reject_unknown(t, {"initial_radius", "max_radius", "rho_prime", "kappa", "theta", "max_inner"}, "trust_region");
      auto& tr = c.trust_region;
      tr.initial_radius = t.value("initial_radius", tr.initial_radius);
      tr.max_radius = t.value("max_radius", tr.max_radius);
      tr.rho_prime = t.value("rho_prime", tr.rho_prime);
      tr.kappa = t.value("kappa", tr.kappa);
      tr.theta = t.value("theta", tr.theta);
      tr.max_inner = t.value("max_inner", tr.max_inner);
    }
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& p) {
  std::ifstream is(p);
  if (!is) throw std::invalid_argument("config: cannot open " + p.string());
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j;
  j["d"] = c.n.size();
  j["n"] = c.n;
  j["ranks"] = c.ranks;
  j["p"] = c.p;
  j["oversampling"] = c.oversampling;
  j["algorithms"] = c.algorithms;
  j["trials"] = c.trials;
  j["seed"] = c.seed;
  j["trust_region"] = {{"initial_radius", c.trust_region.initial_radius},
                       {"max_radius", c.trust_region.max_radius},
                       {"rho_prime", c.trust_region.rho_prime},
                       {"kappa", c.trust_region.kappa},
                       {"theta", c.trust_region.theta},
                       {"max_inner", c.trust_region.max_inner}};
  j["max_time_s"] = c.max_time_s;
  j["max_iters"] = c.max_iters;
  j["grad_tol"] = c.trust_region.grad_tol;
  j["output_dir"] = c.output_dir;
  return j.dump(2);
}

TrialSeeds trial_seeds(std::uint64_t master, Index trial) {
  std::uint64_t state = master + static_cast<std::uint64_t>(trial + 1) * 0x9E3779B97F4A7C15ULL;
  TrialSeeds s{};
  s.target = splitmix64(state);
  s.train = splitmix64(state);
  s.test = splitmix64(state);
  s.init = splitmix64(state);
  s.perturb = splitmix64(state);
  return s;
}

TrialOutcome run_trial(const ExperimentConfig& cfg, Index trial, std::vector<RunLog>* logs) {
  const Shape shape = cfg.shape();
  const TrialSeeds seeds = trial_seeds(cfg.seed, trial);
  const TTTensor target = random_tt(shape, seeds.target);
  const Index count = cfg.omega_size();
  auto train = std::make_shared<const IndexSet>(sample_indices(SamplingSpec{cfg.p, count, seeds.train}, cfg.n));
  auto test = std::make_shared<const IndexSet>(sample_indices(SamplingSpec{cfg.p, count, seeds.test}, cfg.n));
  const CompletionProblem problem(observe(target, train), observe(target, test));
  const TTTensor x0 = random_tt(shape, seeds.init);

  TrialOutcome out;
  out.trial = trial;
  ConditionOptions copt;
  copt.seed = seeds.perturb;
  const ConditionEstimate ce = condition_estimate(problem, make_base_point(target), copt);
  out.kappa_target = ce.kappa;
  out.lambda_max_target = ce.lambda_max;
  out.lambda_min_pos_target = ce.lambda_min_pos;
  out.condest_converged = ce.converged;

  for (const std::string& algo : cfg.algorithms) {
    OptResult r;
    if (algo == "rtr" || algo == "fdtr") {
      TrustRegionConfig tr = cfg.trust_region;
      tr.max_iters = cfg.max_iters;
      tr.max_time_s = cfg.max_time_s;
      tr.perturb_seed = seeds.perturb;
      r = rtr_minimize(problem, x0, tr, algo == "rtr" ? HessianMode::exact : HessianMode::fd, trial);
    } else if (algo == "rcg") {
      RcgConfig rc;
      rc.max_iters = cfg.max_iters;
      rc.max_time_s = cfg.max_time_s;
      rc.grad_tol = cfg.trust_region.grad_tol;
      r = rcg_minimize(problem, x0, rc, trial);
    } else {
      AlsConfig ac;
      ac.max_sweeps = cfg.max_iters;
      ac.max_time_s = cfg.max_time_s;
      ac.grad_tol = cfg.trust_region.grad_tol;
      r = als_minimize(problem, x0, ac, trial);
    }
    out.algos.push_back(outcome_of(algo, r));
    if (logs) logs->push_back(std::move(r.log));
  }
  return out;
}

ExperimentSummary run_experiment(const ExperimentConfig& cfg, Index jobs, const std::filesystem::path& out_dir) {
  cfg.validate();
  const std::filesystem::path dir = out_dir.empty() ? std::filesystem::path(cfg.output_dir) : out_dir;
  std::filesystem::create_directories(dir / "logs");

  ExperimentSummary sum;
  const Shape shape = cfg.shape();
  sum.manifold_dim = shape.manifold_dim();
  sum.omega_size = cfg.omega_size();
  sum.oversampling_achieved = static_cast<double>(sum.omega_size) / static_cast<double>(sum.manifold_dim);
  double total = 1.0;
  for (Index nk : cfg.n) total *= static_cast<double>(nk);
  sum.sampling_ratio = static_cast<double>(sum.omega_size) / total;
  sum.trials.resize(u(cfg.trials));

  jobs = std::max<Index>(1, std::min(jobs, cfg.trials));
  std::atomic<Index> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto worker = [&] {
    if (jobs > 1) omp_set_num_threads(1);
    for (Index t = next++; t < cfg.trials; t = next++) {
      try {
        std::vector<RunLog> logs;
        sum.trials[u(t)] = run_trial(cfg, t, &logs);
        for (const RunLog& l : logs) {
          char name[64];
          std::snprintf(name, sizeof(name), "trial_%03ld_%s.csv", static_cast<long>(t), l.algo.c_str());
          l.save_csv(dir / "logs" / name);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!err) err = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (Index i = 0; i < jobs; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (err) std::rethrow_exception(err);

  json j;
  j["config"] = json::parse(config_to_json(cfg));
  j["manifold_dim"] = sum.manifold_dim;
  j["omega_size"] = sum.omega_size;
  j["oversampling_achieved"] = sum.oversampling_achieved;
  j["sampling_ratio"] = sum.sampling_ratio;
  json counts = json::object();
  for (const auto& a : cfg.algorithms) counts[a] = 0;
  json trials = json::array();
  for (const TrialOutcome& t : sum.trials) {
    json jt;
    jt["trial"] = t.trial;
    jt["kappa_target"] = num(t.kappa_target);
    jt["lambda_max_target"] = num(t.lambda_max_target);
    jt["lambda_min_pos_target"] = num(t.lambda_min_pos_target);
    jt["condest_converged"] = t.condest_converged;
    json ja = json::object();
    for (const AlgoOutcome& a : t.algos) {
      ja[a.algo] = {{"final_cost", num(a.final_cost)},
                    {"final_test_cost", num(a.final_test_cost)},
                    {"final_grad_norm", num(a.final_grad_norm)},
                    {"iterations", a.iterations},
                    {"converged", a.converged},
                    {"stop_reason", a.stop_reason}};
      if (a.converged) counts[a.algo] = counts[a.algo].get<int>() + 1;
    }
    jt["algorithms"] = ja;
    trials.push_back(jt);
  }
  j["converged_trials"] = counts;
  j["trials"] = trials;
  std::ofstream os(dir / "summary.json");
  if (!os) throw std::runtime_error("cannot write summary.json");
  os << j.dump(2) << '\n';
  return sum;
}

}  // namespace ttman
