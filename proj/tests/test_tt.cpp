#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "test_util.hpp"
#include "ttman/tt.hpp"

namespace ttman {
namespace {

using testing::all_indices;
using testing::dense_from_cores;
using testing::random_cores;
using testing::rel;

TEST(Shape, ManifoldDimension) {
  EXPECT_EQ(Shape::from_interior({2, 3, 2}, {2, 2}).manifold_dim(), 12);
  EXPECT_EQ(Shape::from_interior(Extents(9, 4), {3, 5, 10, 10, 10, 10, 5, 3}).manifold_dim(), 1276);
}

TEST(Shape, Feasibility) {
  EXPECT_TRUE(Shape::from_interior({2, 2, 2}, {2, 2}).feasible());
  EXPECT_FALSE(Shape::from_interior({2, 2, 2}, {3, 2}).feasible());
  EXPECT_THROW(Shape::from_interior({2, 2, 2}, {3, 2}).require_feasible(), std::invalid_argument);
  const Shape s = Shape::uniform_capped(30, 4, 5);
  EXPECT_TRUE(s.feasible());
  EXPECT_EQ(s.rank(1), 4);
  EXPECT_EQ(s.rank(2), 5);
  EXPECT_EQ(s.rank(29), 4);
}

TEST(Dense, FlattenByHand) {
  DenseTensor t({2, 2, 2});
  for (const auto& idx : all_indices(t.dims())) t(idx) = 4.0 * idx[2] + 2.0 * idx[1] + idx[0];
  const Matrix f = flatten(t, 2);
  ASSERT_EQ(f.rows(), 4);
  ASSERT_EQ(f.cols(), 2);
  for (Index c = 0; c < 2; ++c)
    for (Index r = 0; r < 4; ++r) EXPECT_EQ(f(r, c), 4.0 * c + r);
}

TEST(Dense, FlattenRoundTripAndMatrixCase) {
  std::mt19937_64 rng(1);
  const DenseTensor t = random_dense({2, 3, 2}, rng);
  for (Index mu = 1; mu <= 2; ++mu) EXPECT_EQ(unflatten(flatten(t, mu), t.dims()).vec(), t.vec());
  const DenseTensor m = random_dense({3, 4}, rng);
  const Matrix f = flatten(m, 1);
  for (Index j = 0; j < 4; ++j)
    for (Index i = 0; i < 3; ++i) EXPECT_EQ(f(i, j), m(Extents{i, j}));
}

TEST(Dense, DeskCap) {
  set_desk_cap(100);
  EXPECT_THROW(DenseTensor({5, 5, 5}), DeskCapError);
  set_desk_cap(0);
  EXPECT_NO_THROW(DenseTensor({5, 5, 5}));
}

TEST(TT, EntryMatchesDenseEverywhere) {
  const Shape s = Shape::uniform(4, 3, 2);
  std::mt19937_64 rng(2);
  const auto cores = random_cores(s, rng);
  const TTTensor x(s, cores);
  const DenseTensor ref = dense_from_cores(s, cores);
  const DenseTensor d = tt_to_dense(x);
  for (const auto& idx : all_indices(s.n)) {
    EXPECT_NEAR(tt_entry(x, idx), ref(idx), 1e-13);
    EXPECT_NEAR(d(idx), ref(idx), 1e-13);
  }
}

TEST(TT, RankOneIsOuterProductAndZeroCore) {
  const Shape s = Shape::uniform(3, 3, 1);
  std::mt19937_64 rng(3);
  auto cores = random_cores(s, rng);
  const TTTensor x(s, cores);
  for (const auto& idx : all_indices(s.n))
    EXPECT_NEAR(tt_entry(x, idx), cores[0](idx[0], 0) * cores[1](idx[1], 0) * cores[2](idx[2], 0), 1e-14);
  cores[1].setZero();
  EXPECT_EQ(tt_to_dense(TTTensor(s, cores)).norm(), 0.0);
}

TEST(TT, InterfaceFactorization) {
  const Shape s = Shape::from_interior({2, 3, 2, 3}, {2, 3, 2});
  const TTTensor x = random_tt(s, 4);
  const DenseTensor d = tt_to_dense(x);
  for (Index k = 1; k < s.order(); ++k) {
    const Matrix prod = left_interface(x, k) * right_interface(x, k).transpose();
    EXPECT_LT(rel(prod, flatten(d, k)), 1e-13) << k;
  }
}

TEST(TT, SvdRoundTripAndRank) {
  const Shape s = Shape::from_interior({3, 4, 4, 3}, {2, 3, 2});
  const DenseTensor d = tt_to_dense(random_tt(s, 5));
  const TTTensor y = tt_svd(d);
  EXPECT_EQ(y.shape().r, s.r);
  EXPECT_LT(rel(tt_to_dense(y), d), 1e-12);
  EXPECT_EQ(tt_rank(d), s.interior_ranks());
}

TEST(TT, SvdOrderTwoIsTruncatedSvd) {
  std::mt19937_64 rng(6);
  const DenseTensor d = random_dense({5, 4}, rng);
  const Matrix m = flatten(d, 1);
  Eigen::JacobiSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Matrix best = svd.matrixU().leftCols(2) * svd.singularValues().head(2).asDiagonal() *
                      svd.matrixV().leftCols(2).transpose();
  const TTTensor y = tt_svd(d, {.ranks = Extents{2}});
  EXPECT_LT(rel(flatten(tt_to_dense(y), 1), best), 1e-12);
}

TEST(TT, SvdClipsOverRequestedRank) {
  const Shape s = Shape::from_interior({3, 3, 3}, {1, 1});
  const DenseTensor d = tt_to_dense(random_tt(s, 7));
  const TTTensor y = tt_svd(d, {.ranks = Extents{3, 3}});
  EXPECT_EQ(y.shape().interior_ranks(), (Extents{1, 1}));
}

TEST(TT, RankOfOuterProductAndGeneric) {
  const DenseTensor outer = tt_to_dense(random_tt(Shape::uniform(4, 3, 1), 8));
  EXPECT_EQ(tt_rank(outer), (Extents{1, 1, 1}));
  const DenseTensor g = tt_to_dense(random_tt(Shape::from_interior({2, 3, 3, 2}, {2, 3, 2}), 9));
  EXPECT_EQ(tt_rank(g), (Extents{2, 3, 2}));
}

TEST(TT, OrthogonalizationInvariants) {
  const Shape s = Shape::from_interior({2, 2, 2}, {2, 2});
  std::mt19937_64 rng(10);
  const TTTensor x(s, random_cores(s, rng));
  const DenseTensor d = tt_to_dense(x);
  for (Index mu = 0; mu < 3; ++mu) {
    const TTTensor y = mu_orthogonalize(x, mu);
    EXPECT_LT(rel(tt_to_dense(y), d), 1e-12);
    for (Index k = 1; k <= mu; ++k) {
      const Matrix l = left_interface(y, k);
      EXPECT_LT((l.transpose() * l - Matrix::Identity(l.cols(), l.cols())).norm(), 1e-12);
    }
    for (Index k = mu + 1; k < 3; ++k) {
      const Matrix r = right_interface(y, k);
      EXPECT_LT((r.transpose() * r - Matrix::Identity(r.cols(), r.cols())).norm(), 1e-12);
    }
  }
  const TTTensor l = left_orthogonalize(x);
  const TTTensor again = left_orthogonalize(l);
  EXPECT_LT(rel(tt_to_dense(again), tt_to_dense(l)), 1e-13);
}

TEST(TT, RightFactorsLinkInterfaces) {
  const Shape s = Shape::from_interior({2, 2, 2}, {2, 2});
  const TTTensor x = random_tt(s, 11);
  const RightOrthFactors f = right_orthogonalize_with_R(x);
  const TTTensor t = tilde_tensor(s, f);
  EXPECT_LT(rel(tt_to_dense(t), tt_to_dense(x)), 1e-12);
  for (Index k = 0; k + 1 < s.order(); ++k) {
    const Matrix& r = f.R[static_cast<std::size_t>(k)];
    EXPECT_LT(rel(right_interface(t, k + 1) * r, right_interface(x, k + 1)), 1e-12);
    EXPECT_LT(r.triangularView<Eigen::StrictlyLower>().toDenseMatrix().norm(), 1e-14);
  }
  for (Index k = 1; k < s.order(); ++k) {
    const Matrix g = right_interface(t, k);
    EXPECT_LT((g.transpose() * g - Matrix::Identity(g.cols(), g.cols())).norm(), 1e-12);
  }
}

TEST(TT, RightFactorsOrderTwo) {
  const TTTensor x = random_tt(Shape::from_interior({3, 3}, {2}), 12);
  const RightOrthFactors f = right_orthogonalize_with_R(x);
  Eigen::FullPivLU<Matrix> lu(f.R[0]);
  EXPECT_TRUE(lu.isInvertible());
}

TEST(TT, InnerAndNorm) {
  const Shape s = Shape::from_interior({3, 2, 3}, {2, 3});
  const TTTensor x = random_tt(s, 13);
  const TTTensor y = random_tt(Shape::from_interior({3, 2, 3}, {3, 2}), 14);
  const DenseTensor dx = tt_to_dense(x), dy = tt_to_dense(y);
  EXPECT_NEAR(tt_dot(x, x), dx.norm() * dx.norm(), 1e-12 * dx.norm() * dx.norm());
  EXPECT_NEAR(tt_dot(x, y), dense_inner(dx, dy), 1e-12 * dx.norm() * dy.norm());
  EXPECT_NEAR(x.norm(), dx.norm(), 1e-12 * dx.norm());
  EXPECT_EQ(tt_dot(x, TTTensor::zeros(y.shape())), 0.0);
  const InnerProduct ip = tt_inner(x, x);
  for (Index k = 1; k < 3; ++k)
    EXPECT_LT((ip.left[static_cast<std::size_t>(k)] - Matrix::Identity(s.rank(k), s.rank(k))).norm(), 1e-12);
}

TEST(TT, AddScaleAndRound) {
  const Shape s = Shape::from_interior({3, 3, 3}, {2, 2});
  const TTTensor x = random_tt(s, 15), y = random_tt(s, 16);
  const DenseTensor dx = tt_to_dense(x);
  EXPECT_LT(rel(tt_to_dense(tt_add(x, y)), dx + tt_to_dense(y)), 1e-13);
  EXPECT_LT(rel(tt_to_dense(tt_add(x, TTTensor::zeros(s))), dx), 1e-14);
  const TTTensor diff = tt_add(x, tt_scale(x, -1.0));
  EXPECT_EQ(diff.shape().interior_ranks(), (Extents{4, 4}));
  EXPECT_LT(tt_to_dense(diff).norm(), 1e-14);
  EXPECT_LT(rel(tt_to_dense(tt_round(x, {2, 2})), dx), 1e-12);
  const TTTensor padded = tt_add(x, TTTensor::zeros(s));
  const RoundResult back = tt_round_exact(padded, {2, 2});
  EXPECT_FALSE(back.rank_deficient);
  EXPECT_LT(rel(tt_to_dense(back.tensor), dx), 1e-12);
}

TEST(TT, RoundMatchesDenseSvd) {
  const Shape s4 = Shape::from_interior({3, 4, 3}, {3, 3});
  const TTTensor x = random_tt(s4, 17);
  const TTTensor y = tt_round(x, {2, 2});
  const TTTensor z = tt_svd(tt_to_dense(x), {.ranks = Extents{2, 2}});
  EXPECT_LT(rel(tt_to_dense(y), tt_to_dense(z)), 1e-10);
}

TEST(TT, RoundExactReportsDeficiency) {
  const TTTensor x = random_tt(Shape::from_interior({3, 3, 3}, {1, 1}), 18);
  const TTTensor padded = tt_add(x, TTTensor::zeros(x.shape()));
  EXPECT_TRUE(tt_round_exact(padded, {2, 2}).rank_deficient);
}

TEST(TT, RandomIsDeterministicAndGeneric) {
  const Shape s = Shape::from_interior({3, 3, 3}, {2, 2});
  const TTTensor a = random_tt(s, 19), b = random_tt(s, 19), c = random_tt(s, 20);
  for (Index k = 0; k < 3; ++k) EXPECT_EQ(a.core(k), b.core(k));
  EXPECT_EQ(tt_rank(tt_to_dense(a)), s.interior_ranks());
  EXPECT_LT(std::abs(tt_dot(a, c)) / (a.norm() * c.norm()), 1 - 1e-6);
}

}  // namespace
}  // namespace ttman
