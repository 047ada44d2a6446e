#include <set>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "ttman/completion.hpp"

namespace ttman {
namespace {

TEST(IndexSet, Validation) {
  EXPECT_NO_THROW(IndexSet({2, 3}, {0, 0, 1, 2}));
  EXPECT_THROW(IndexSet({2, 3}, {0, 0, 1}), std::invalid_argument);
  EXPECT_THROW(IndexSet({2, 3}, {0, 3}), std::out_of_range);
  EXPECT_THROW(IndexSet({2, 3}, {1, 2, 1, 2}), std::invalid_argument);
}

TEST(SparseTensor, DenseAndNorm) {
  const SparseTensor t({2, 3}, {0, 0, 1, 2}, {3.0, -4.0});
  EXPECT_DOUBLE_EQ(t.norm(), 5.0);
  const DenseTensor d = t.to_dense();
  EXPECT_EQ(d(Extents{0, 0}), 3.0);
  EXPECT_EQ(d(Extents{1, 2}), -4.0);
  EXPECT_DOUBLE_EQ(d.norm(), 5.0);
  const SparseTensor u = t.with_values({1.0, 2.0});
  EXPECT_EQ(u.omega_ptr(), t.omega_ptr());
}

TEST(Sampling, UniqueInBoundsAndDeterministic) {
  const Extents dims{4, 4, 4};
  const auto spec = make_sampling_spec(dims, uniform_distribution(4), 40, 7);
  const IndexSet a = sample_indices(spec, dims), b = sample_indices(spec, dims);
  EXPECT_EQ(a.flat(), b.flat());
  ASSERT_EQ(a.size(), 40);
  std::set<Extents> seen;
  for (Index s = 0; s < a.size(); ++s) seen.insert(Extents(a.at(s).begin(), a.at(s).end()));
  EXPECT_EQ(seen.size(), 40u);
}

TEST(Sampling, DegenerateSupport) {
  const Extents dims{4, 4, 4};
  const std::vector<double> p{1, 0, 0, 0};
  const IndexSet one = sample_indices(make_sampling_spec(dims, p, 1, 1), dims);
  EXPECT_EQ(one.flat(), (std::vector<Index>{0, 0, 0}));
  EXPECT_THROW(sample_indices(make_sampling_spec(dims, p, 2, 1), dims), std::invalid_argument);
}

TEST(Sampling, RejectsBadDistributions) {
  const Extents dims{3, 3};
  EXPECT_THROW(sample_indices(make_sampling_spec(dims, {0.5, 0.5}, 1, 1), dims), std::invalid_argument);
  EXPECT_THROW(sample_indices(make_sampling_spec(dims, {0.5, 0.6, -0.1}, 1, 1), dims), std::invalid_argument);
  EXPECT_THROW(sample_indices(make_sampling_spec(dims, {0.2, 0.2, 0.2}, 1, 1), dims), std::invalid_argument);
}

TEST(Sampling, SkewedFrequenciesWithinThreeSigma) {
  // Duplicate rejection biases the frequencies once collisions are common;
  // at d = 30 the expected number of collisions among 10^4 draws is about 40.
  const Extents dims(30, 4);
  const std::vector<double> p{50.0 / 65, 12.0 / 65, 2.0 / 65, 1.0 / 65};
  const Index m = 10000;
  const IndexSet omega = sample_indices(make_sampling_spec(dims, p, m, 11), dims);
  for (Index k = 0; k < 30; ++k) {
    std::vector<double> count(4, 0.0);
    for (Index s = 0; s < m; ++s) count[static_cast<std::size_t>(omega(s, k))] += 1.0;
    for (std::size_t i = 0; i < 4; ++i) {
      const double sigma = std::sqrt(m * p[i] * (1 - p[i]));
      EXPECT_LT(std::abs(count[i] - m * p[i]), 3 * sigma + 1) << "mode " << k << " value " << i;
    }
  }
}

TEST(Sampling, SamplingRatioOfLargeUniformConfig) {
  const Shape s = Shape::from_interior(Extents(9, 4), {3, 5, 10, 10, 10, 10, 5, 3});
  const Index m = static_cast<Index>(std::llround(20.5 * s.manifold_dim()));
  EXPECT_EQ(m, 26158);
  EXPECT_NEAR(static_cast<double>(m) / s.num_entries(), 0.0998, 5e-5);
}

TEST(Observe, MatchesEntries) {
  const TTTensor x = random_tt(Shape::from_interior({3, 3, 3}, {2, 2}), 3);
  const Extents dims{3, 3, 3};
  auto omega = std::make_shared<const IndexSet>(sample_indices(make_sampling_spec(dims, uniform_distribution(3), 10, 4), dims));
  const SparseTensor t = observe(x, omega);
  for (Index s = 0; s < omega->size(); ++s) EXPECT_NEAR(t.values()[s], tt_entry(x, omega->at(s)), 1e-14);
}

}  // namespace
}  // namespace ttman
