#include "ttman/completion.hpp"

#include <cmath>
#include <random>
#include <unordered_set>

#include "ttman/kernels.hpp"

namespace ttman {

namespace {

struct IndexHash {
  std::size_t operator()(const std::vector<Index>& v) const {
    std::size_t h = 0x9e3779b97f4a7c15ULL;
    for (Index x : v) h ^= static_cast<std::size_t>(x) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return h;
  }
};

double half_sq(const std::vector<double>& r) {
  double s = 0.0;
  for (double v : r) s += v * v;
  return 0.5 * s;
}

std::vector<double> residual(const TTTensor& x, const SparseTensor& data) {
  if (x.shape().n != data.dims()) throw std::invalid_argument("completion: shape mismatch");
  std::vector<double> r = kernels::entries(x, data.omega());
  for (std::size_t s = 0; s < r.size(); ++s) r[s] -= data.values()[s];
  return r;
}

}  // namespace

std::vector<double> uniform_distribution(Index n) { return std::vector<double>(static_cast<std::size_t>(n), 1.0 / n); }

SamplingSpec make_sampling_spec(const Extents& dims, const std::vector<double>& p, Index count, std::uint64_t seed) {
  return SamplingSpec{std::vector<std::vector<double>>(dims.size(), p), count, seed};
}

IndexSet sample_indices(const SamplingSpec& spec, const Extents& dims) {
  const std::size_t d = dims.size();
  if (spec.p.size() != d) throw std::invalid_argument("sample_indices: need one distribution per mode");
  if (spec.count < 1) throw std::invalid_argument("sample_indices: count must be positive");
  Extents support(d);
  std::vector<std::discrete_distribution<Index>> dist;
  for (std::size_t k = 0; k < d; ++k) {
    const auto& p = spec.p[k];
    if (static_cast<Index>(p.size()) != dims[k]) throw std::invalid_argument("sample_indices: p has wrong length");
    double sum = 0.0;
    for (double v : p) {
      if (!(v >= 0.0)) throw std::invalid_argument("sample_indices: negative probability");
      sum += v;
      if (v > 0.0) ++support[k];
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("sample_indices: probabilities must sum to 1");
    dist.emplace_back(p.begin(), p.end());
  }
  if (spec.count > checked_product(support))
    throw std::invalid_argument("sample_indices: count exceeds the number of attainable distinct indices");

  std::mt19937_64 rng(spec.seed);
  std::unordered_set<std::vector<Index>, IndexHash> seen;
  std::vector<Index> flat;
  flat.reserve(static_cast<std::size_t>(spec.count) * d);
  std::vector<Index> idx(d);
  while (static_cast<Index>(seen.size()) < spec.count) {
    for (std::size_t k = 0; k < d; ++k) idx[k] = dist[k](rng);
    if (seen.insert(idx).second) flat.insert(flat.end(), idx.begin(), idx.end());
  }
  return IndexSet(dims, std::move(flat));
}

SparseTensor observe(const TTTensor& x, std::shared_ptr<const IndexSet> omega) {
  std::vector<double> v = kernels::entries(x, *omega);
  return SparseTensor(std::move(omega), std::move(v));
}

double completion_cost(const TTTensor& x, const SparseTensor& data) { return half_sq(residual(x, data)); }

SparseTensor completion_egrad(const TTTensor& x, const SparseTensor& data) {
  return data.with_values(residual(x, data));
}

SparseTensor completion_ehess(const TangentVector& v, const SparseTensor& data) {
  if (v.base()->shape().n != data.dims()) throw std::invalid_argument("completion_ehess: shape mismatch");
  return data.with_values(tangent_entries(v, data.omega()));
}

CompletionProblem::CompletionProblem(SparseTensor train, std::optional<SparseTensor> test)
    : train_(std::move(train)), test_(std::move(test)) {
  if (test_ && test_->dims() != train_.dims()) throw std::invalid_argument("CompletionProblem: test shape mismatch");
}

TangentOp CompletionProblem::hessian_operator(const BasePtr& x, const AmbientVector& eg) const {
  const auto* g = std::get_if<SparseTensor>(&eg);
  if (!g || g->omega_ptr() != train_.omega_ptr()) return Problem::hessian_operator(x, eg);
  auto si = std::make_shared<const kernels::SampleInterfaces>(
      kernels::sample_interfaces(x->x, x->f.cores_tilde, train_.omega()));
  auto ag = std::make_shared<const std::vector<Matrix>>(kernels::a_family(x->x, *si, train_.omega(), g->values()));
  auto zg = std::make_shared<const SparseTensor>(*g);
  return [x, si, ag, zg](const TangentVector& v) {
    if (v.base() != x) throw std::invalid_argument("hessian_operator: tangent vector at a different point");
    const std::vector<Matrix> dv = to_param(v, Param::first).cores();
    kernels::CompletionFamilies cf = kernels::completion_families(x->x, *si, dv, zg->omega(), zg->values());
    const HessianWorkspace ws = make_workspace(v, kernels::Families{*ag, std::move(cf.B), std::move(cf.C)});
    std::vector<Matrix> cores = weingarten(ws).cores();
    for (Index k = 0; k < x->order(); ++k) cores[static_cast<std::size_t>(k)] += gauge_core(*x, k, cf.Ae[static_cast<std::size_t>(k)]);
    return unchecked_tangent(x, std::move(cores), Param::gauged);
  };
}

std::optional<double> CompletionProblem::test_cost(const BasePoint& x) const {
  if (!test_) return std::nullopt;
  return completion_cost(x.x, *test_);
}

}  // namespace ttman
