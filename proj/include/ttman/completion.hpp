#pragma once

#include <cstdint>

#include "ttman/problem.hpp"
#include "ttman/sparse.hpp"

namespace ttman {

/// Per-mode categorical distributions over {0..n_k-1}.
struct SamplingSpec {
  std::vector<std::vector<double>> p;
  Index count = 0;
  std::uint64_t seed = 0;
};

std::vector<double> uniform_distribution(Index n);
/// The same distribution for every mode.
SamplingSpec make_sampling_spec(const Extents& dims, const std::vector<double>& p, Index count, std::uint64_t seed);

/// |Omega| distinct multi-indices, coordinates drawn independently from p,
/// duplicates rejected and redrawn. Throws std::invalid_argument when the
/// count exceeds the size of the support of p.
IndexSet sample_indices(const SamplingSpec& spec, const Extents& dims);

/// Values of a TT tensor on an index set.
SparseTensor observe(const TTTensor& x, std::shared_ptr<const IndexSet> omega);

double completion_cost(const TTTensor& x, const SparseTensor& data);
/// Residual X(i) - A(i) on Omega.
SparseTensor completion_egrad(const TTTensor& x, const SparseTensor& data);
/// V(i) on Omega.
SparseTensor completion_ehess(const TangentVector& v, const SparseTensor& data);

/// f(X) = 1/2 sum_{i in Omega} (X(i) - A(i))^2 with an optional independent
/// test set evaluated the same way.
class CompletionProblem : public Problem {
 public:
  explicit CompletionProblem(SparseTensor train, std::optional<SparseTensor> test = std::nullopt);

  const Extents& dims() const override { return train_.dims(); }
  double cost(const BasePoint& x) const override { return completion_cost(x.x, train_); }
  AmbientVector egrad(const BasePoint& x) const override { return completion_egrad(x.x, train_); }
  AmbientVector ehess(const BasePoint&, const TangentVector& v) const override {
    return completion_ehess(v, train_);
  }
  std::optional<double> test_cost(const BasePoint& x) const override;
  /// Caches the per-sample interface vectors of x and the A family of the
  /// gradient, then needs one pass over Omega per application.
  TangentOp hessian_operator(const BasePtr& x, const AmbientVector& eg) const override;

  const SparseTensor& train() const { return train_; }
  const std::optional<SparseTensor>& test() const { return test_; }

 private:
  SparseTensor train_;
  std::optional<SparseTensor> test_;
};

}  // namespace ttman
