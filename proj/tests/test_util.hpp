#pragma once

// Independent dense references shared by the unit tests. Everything here is
// written from the definitions with plain loops over multi-indices.

#include <cmath>
#include <random>

#include "ttman/run_log.hpp"
#include "ttman/tangent.hpp"

namespace ttman::testing {

/// All multi-indices of dims, first index fastest.
inline std::vector<Extents> all_indices(const Extents& dims) {
  std::vector<Extents> out;
  Extents idx(dims.size(), 0);
  const Index total = checked_product(dims);
  for (Index lin = 0; lin < total; ++lin) {
    out.push_back(idx);
    for (std::size_t k = 0; k < dims.size(); ++k) {
      if (++idx[k] < dims[k]) break;
      idx[k] = 0;
    }
  }
  return out;
}

/// Product of slices of the given cores at a multi-index, read directly from
/// the storage layout (row a + r_k i of core k).
inline double slice_product(const Shape& s, const std::vector<Matrix>& cores, const Extents& idx) {
  Matrix acc = Matrix::Ones(1, 1);
  for (Index k = 0; k < s.order(); ++k) {
    const Index rl = s.rank(k), rr = s.rank(k + 1);
    Matrix sl(rl, rr);
    for (Index a = 0; a < rl; ++a)
      for (Index b = 0; b < rr; ++b) sl(a, b) = cores[static_cast<std::size_t>(k)](a + rl * idx[k], b);
    acc = acc * sl;
  }
  return acc(0, 0);
}

inline DenseTensor dense_from_cores(const Shape& s, const std::vector<Matrix>& cores) {
  DenseTensor t(s.n);
  for (const auto& idx : all_indices(s.n)) t(idx) = slice_product(s, cores, idx);
  return t;
}

/// Tangent vector value sum_k X_{<k}(i) dV~_k(i_k) X_{>k}(i) in the first
/// parametrization, evaluated entrywise.
inline DenseTensor dense_tangent_first(const TTTensor& x, const std::vector<Matrix>& dv) {
  const Shape& s = x.shape();
  DenseTensor t(s.n);
  for (Index k = 0; k < s.order(); ++k) {
    std::vector<Matrix> c = x.cores();
    c[static_cast<std::size_t>(k)] = dv[static_cast<std::size_t>(k)];
    t += dense_from_cores(s, c);
  }
  return t;
}

inline double rel(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

inline double rel(const DenseTensor& a, const DenseTensor& b) {
  return (a.vec() - b.vec()).norm() / std::max(b.norm(), 1e-300);
}

inline std::vector<Matrix> random_cores(const Shape& s, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  std::vector<Matrix> c;
  for (Index k = 0; k < s.order(); ++k) {
    Matrix m(s.rank(k) * s.mode(k), s.rank(k + 1));
    for (Index j = 0; j < m.size(); ++j) m.data()[j] = nd(rng);
    c.push_back(m);
  }
  return c;
}

/// Gradient norms at accepted iterates (the initial row and every accepted
/// step) of a trust-region log.
inline std::vector<double> accepted_grad_norms(const RunLog& log) {
  std::vector<double> g;
  for (const RunRow& r : log.rows)
    if (r.step_type == "init" || r.step_type.rfind("accept", 0) == 0) g.push_back(r.grad_norm);
  return g;
}

/// ||g_{k+1}|| <= c ||g_k||^order over the final `steps` accepted steps.
inline bool superlinear_tail(const RunLog& log, std::size_t steps = 3, double c = 1.0, double order = 1.5) {
  const std::vector<double> g = accepted_grad_norms(log);
  if (g.size() < steps + 1) return false;
  for (std::size_t k = g.size() - steps - 1; k + 1 < g.size(); ++k)
    if (!(g[k + 1] <= c * std::pow(g[k], order))) return false;
  return true;
}

}  // namespace ttman::testing
