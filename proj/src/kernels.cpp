#include "ttman/kernels.hpp"

#include <algorithm>

namespace ttman::kernels {

namespace {

std::size_t u(Index k) { return static_cast<std::size_t>(k); }

Families zero_families(const Shape& s, bool with_bc) {
  Families f;
  for (Index k = 0; k < s.order(); ++k) {
    f.A.push_back(Matrix::Zero(s.rank(k) * s.mode(k), s.rank(k + 1)));
    if (with_bc) {
      f.B.push_back(f.A.back());
      f.C.push_back(f.A.back());
    }
  }
  return f;
}

void check_inputs(const TTTensor& x, const IndexSet& omega, std::size_t nz) {
  if (omega.dims() != x.shape().n) throw std::invalid_argument("kernels: index set shape does not match tensor");
  if (static_cast<Index>(nz) != omega.size()) throw std::invalid_argument("kernels: value count mismatch");
}

struct Context {
  const TTTensor& x;
  const std::vector<Matrix>* tilde;
  const std::vector<Matrix>* dv;
  const IndexSet& omega;
  std::span<const double> z;
};

// Slices are tiny (a few rows and columns), where Eigen's dynamic-size
// product dispatch costs more than the arithmetic, so the per-sample work is
// written as plain loops over the column-major core buffers. Slice i of a
// core with rl rows per slice starts at data + i*rl with leading dimension
// rows().

// y (+)= S^T x, S = slice (rl x rr).
template <bool Add = false>
inline void slice_t_mul(const Matrix& core, Index rl, Index i, const double* x, double* y) {
  const Index ld = core.rows(), rr = core.cols();
  const double* s = core.data() + i * rl;
  for (Index b = 0; b < rr; ++b) {
    const double* col = s + b * ld;
    double acc = 0.0;
    for (Index a = 0; a < rl; ++a) acc += col[a] * x[a];
    if constexpr (Add)
      y[b] += acc;
    else
      y[b] = acc;
  }
}

// y (+)= S x.
template <bool Add>
inline void slice_mul(const Matrix& core, Index rl, Index i, const double* x, double* y) {
  const Index ld = core.rows(), rr = core.cols();
  const double* s = core.data() + i * rl;
  if constexpr (!Add)
    for (Index a = 0; a < rl; ++a) y[a] = 0.0;
  for (Index b = 0; b < rr; ++b) {
    const double* col = s + b * ld;
    const double xb = x[b];
    for (Index a = 0; a < rl; ++a) y[a] += col[a] * xb;
  }
}

// Slice i of acc += z * l r^T.
inline void slice_outer(Matrix& acc, Index rl, Index i, double z, const double* l, const double* r) {
  const Index ld = acc.rows(), rr = acc.cols();
  double* s = acc.data() + i * rl;
  for (Index b = 0; b < rr; ++b) {
    double* col = s + b * ld;
    const double zb = z * r[b];
    for (Index a = 0; a < rl; ++a) col[a] += l[a] * zb;
  }
}

// Flat per-thread vectors, one block of max-rank length per position.
struct Scratch {
  Index stride;
  std::vector<double> l, vl, rho, vrho, rhot;
  Scratch(Index d, Index rmax)
      : stride(rmax),
        l(u((d + 1) * rmax)),
        vl(u((d + 1) * rmax)),
        rho(u((d + 1) * rmax)),
        vrho(u((d + 1) * rmax)),
        rhot(u((d + 1) * rmax)) {}
  double* at(std::vector<double>& v, Index k) { return v.data() + k * stride; }
};

Index max_rank(const Shape& s) { return *std::max_element(s.r.begin(), s.r.end()); }

template <bool WithBC>
void accumulate(const Context& c, Index begin, Index end, Families& acc, Scratch& sc) {
  const Shape& s = c.x.shape();
  const Index d = s.order();
  const auto& tl = *c.tilde;
  for (Index t = begin; t < end; ++t) {
    const double z = c.z[u(t)];
    const Index* idx = c.omega.flat().data() + t * d;
    sc.at(sc.l, 0)[0] = 1.0;
    for (Index k = 0; k + 1 < d; ++k)
      slice_t_mul(c.x.core(k), s.rank(k), idx[k], sc.at(sc.l, k), sc.at(sc.l, k + 1));
    sc.at(sc.rhot, d)[0] = 1.0;
    for (Index k = d - 1; k >= 1; --k)
      slice_mul<false>(tl[u(k)], s.rank(k), idx[k], sc.at(sc.rhot, k + 1), sc.at(sc.rhot, k));
    if constexpr (WithBC) {
      const auto& dv = *c.dv;
      sc.at(sc.rho, d)[0] = 1.0;
      sc.at(sc.vrho, d)[0] = 0.0;
      for (Index k = d - 1; k >= 1; --k) {
        const Index rl = s.rank(k), i = idx[k];
        slice_mul<false>(c.x.core(k), rl, i, sc.at(sc.vrho, k + 1), sc.at(sc.vrho, k));
        slice_mul<true>(dv[u(k)], rl, i, sc.at(sc.rho, k + 1), sc.at(sc.vrho, k));
        slice_mul<false>(c.x.core(k), rl, i, sc.at(sc.rho, k + 1), sc.at(sc.rho, k));
      }
      sc.at(sc.vl, 0)[0] = 0.0;
      for (Index k = 0; k + 1 < d; ++k) {
        const Index rl = s.rank(k), i = idx[k];
        slice_t_mul(c.x.core(k), rl, i, sc.at(sc.vl, k), sc.at(sc.vl, k + 1));
        slice_t_mul<true>(dv[u(k)], rl, i, sc.at(sc.l, k), sc.at(sc.vl, k + 1));
      }
    }
    for (Index k = 0; k < d; ++k) {
      const Index rl = s.rank(k), i = idx[k];
      slice_outer(acc.A[u(k)], rl, i, z, sc.at(sc.l, k), sc.at(sc.rhot, k + 1));
      if constexpr (WithBC) {
        if (k > 0) slice_outer(acc.B[u(k)], rl, i, z, sc.at(sc.vl, k), sc.at(sc.rhot, k + 1));
        if (k + 1 < d) slice_outer(acc.C[u(k)], rl, i, z, sc.at(sc.l, k), sc.at(sc.vrho, k + 1));
      }
    }
  }
}

template <bool WithBC>
Families run_chunked(const Context& c) {
  const Index nnz = c.omega.size();
  const Index nc = chunk_count(nnz);
  const Index d = c.x.order();
  Families out = zero_families(c.x.shape(), WithBC);
  if (nc == 0) return out;
  std::vector<Families> partial(u(nc));
#pragma omp parallel
  {
    Scratch sc(d, max_rank(c.x.shape()));
#pragma omp for schedule(static)
    for (Index ch = 0; ch < nc; ++ch) {
      partial[u(ch)] = zero_families(c.x.shape(), WithBC);
      accumulate<WithBC>(c, ch * nnz / nc, (ch + 1) * nnz / nc, partial[u(ch)], sc);
    }
  }
  for (const Families& p : partial)
    for (Index k = 0; k < d; ++k) {
      out.A[u(k)] += p.A[u(k)];
      if constexpr (WithBC) {
        out.B[u(k)] += p.B[u(k)];
        out.C[u(k)] += p.C[u(k)];
      }
    }
  return out;
}

// Deterministic chunked reduction of per-chunk matrix families.
template <class Fam, class Zero, class Body, class Add>
Fam reduce_chunks(Index nnz, Zero zero, Body body, Add add) {
  const Index nc = chunk_count(nnz);
  Fam out = zero();
  if (nc == 0) return out;
  std::vector<Fam> partial(u(nc));
#pragma omp parallel for schedule(static)
  for (Index ch = 0; ch < nc; ++ch) {
    partial[u(ch)] = zero();
    body(ch * nnz / nc, (ch + 1) * nnz / nc, partial[u(ch)]);
  }
  for (const Fam& p : partial) add(out, p);
  return out;
}

std::vector<Matrix> zero_cores(const Shape& s) {
  std::vector<Matrix> out;
  for (Index k = 0; k < s.order(); ++k) out.push_back(Matrix::Zero(s.rank(k) * s.mode(k), s.rank(k + 1)));
  return out;
}

void add_cores(std::vector<Matrix>& a, const std::vector<Matrix>& b) {
  for (std::size_t k = 0; k < a.size(); ++k) a[k] += b[k];
}

}  // namespace

Index chunk_count(Index nnz) {
  if (nnz <= 0) return 0;
  return std::min<Index>(64, (nnz + 255) / 256);
}

std::vector<double> entries(const TTTensor& x, const IndexSet& omega) {
  check_inputs(x, omega, u(omega.size()));
  const Index nnz = omega.size();
  const Index d = x.order();
  const Shape& s = x.shape();
  const Index rmax = max_rank(s);
  std::vector<double> out(u(nnz));
#pragma omp parallel
  {
    std::vector<double> a(u(rmax)), b(u(rmax));
#pragma omp for schedule(static)
    for (Index t = 0; t < nnz; ++t) {
      const Index* idx = omega.flat().data() + t * d;
      a[0] = 1.0;
      for (Index k = 0; k < d; ++k) {
        slice_t_mul(x.core(k), s.rank(k), idx[k], a.data(), b.data());
        a.swap(b);
      }
      out[u(t)] = a[0];
    }
  }
  return out;
}

std::vector<double> tangent_entries(const TTTensor& x, const std::vector<Matrix>& dv, const IndexSet& omega) {
  check_inputs(x, omega, u(omega.size()));
  const Index nnz = omega.size();
  const Index d = x.order();
  const Shape& s = x.shape();
  const Index rmax = max_rank(s);
  std::vector<double> out(u(nnz));
#pragma omp parallel
  {
    std::vector<double> l(u(rmax)), vl(u(rmax)), tmp(u(rmax));
#pragma omp for schedule(static)
    for (Index t = 0; t < nnz; ++t) {
      const Index* idx = omega.flat().data() + t * d;
      l[0] = 1.0;
      vl[0] = 0.0;
      for (Index k = 0; k < d; ++k) {
        const Index rl = s.rank(k), i = idx[k];
        slice_t_mul(x.core(k), rl, i, vl.data(), tmp.data());
        slice_t_mul<true>(dv[u(k)], rl, i, l.data(), tmp.data());
        vl.swap(tmp);
        slice_t_mul(x.core(k), rl, i, l.data(), tmp.data());
        l.swap(tmp);
      }
      out[u(t)] = vl[0];
    }
  }
  return out;
}

std::vector<Matrix> a_family(const TTTensor& x, const std::vector<Matrix>& tilde, const IndexSet& omega,
                             std::span<const double> z) {
  check_inputs(x, omega, z.size());
  return run_chunked<false>(Context{x, &tilde, nullptr, omega, z}).A;
}

Families three_products(const TTTensor& x, const std::vector<Matrix>& tilde, const std::vector<Matrix>& dv,
                        const IndexSet& omega, std::span<const double> z) {
  check_inputs(x, omega, z.size());
  return run_chunked<true>(Context{x, &tilde, &dv, omega, z});
}

SampleInterfaces sample_interfaces(const TTTensor& x, const std::vector<Matrix>& tilde, const IndexSet& omega) {
  check_inputs(x, omega, u(omega.size()));
  const Shape& s = x.shape();
  const Index d = s.order();
  const Index nnz = omega.size();
  SampleInterfaces si;
  si.d = d;
  si.stride = max_rank(s);
  const std::size_t total = u(nnz * (d + 1) * si.stride);
  si.left.assign(total, 0.0);
  si.right.assign(total, 0.0);
  si.tilde.assign(total, 0.0);
#pragma omp parallel for schedule(static)
  for (Index t = 0; t < nnz; ++t) {
    const Index* idx = omega.flat().data() + t * d;
    double* l0 = si.left.data() + t * (d + 1) * si.stride;
    double* r0 = si.right.data() + t * (d + 1) * si.stride;
    double* t0 = si.tilde.data() + t * (d + 1) * si.stride;
    l0[0] = 1.0;
    for (Index k = 0; k < d; ++k) slice_t_mul(x.core(k), s.rank(k), idx[k], l0 + k * si.stride, l0 + (k + 1) * si.stride);
    r0[d * si.stride] = 1.0;
    t0[d * si.stride] = 1.0;
    for (Index k = d - 1; k >= 0; --k) {
      slice_mul<false>(x.core(k), s.rank(k), idx[k], r0 + (k + 1) * si.stride, r0 + k * si.stride);
      slice_mul<false>(tilde[u(k)], s.rank(k), idx[k], t0 + (k + 1) * si.stride, t0 + k * si.stride);
    }
  }
  return si;
}

std::vector<Matrix> a_family(const TTTensor& x, const SampleInterfaces& si, const IndexSet& omega,
                             std::span<const double> z) {
  check_inputs(x, omega, z.size());
  const Shape& s = x.shape();
  const Index d = s.order();
  return reduce_chunks<std::vector<Matrix>>(
      omega.size(), [&] { return zero_cores(s); },
      [&](Index begin, Index end, std::vector<Matrix>& acc) {
        for (Index t = begin; t < end; ++t) {
          const Index* idx = omega.flat().data() + t * d;
          for (Index k = 0; k < d; ++k)
            slice_outer(acc[u(k)], s.rank(k), idx[k], z[u(t)], si.l(t, k), si.rhot(t, k + 1));
        }
      },
      add_cores);
}

CompletionFamilies completion_families(const TTTensor& x, const SampleInterfaces& si, const std::vector<Matrix>& dv,
                                       const IndexSet& omega, std::span<const double> zg) {
  check_inputs(x, omega, zg.size());
  const Shape& s = x.shape();
  const Index d = s.order();
  const Index stride = si.stride;
  auto zero = [&] { return CompletionFamilies{zero_cores(s), zero_cores(s), zero_cores(s)}; };
  auto body = [&](Index begin, Index end, CompletionFamilies& acc) {
    std::vector<double> vl(u((d + 1) * stride)), vrho(u((d + 1) * stride));
    for (Index t = begin; t < end; ++t) {
      const Index* idx = omega.flat().data() + t * d;
      vl[0] = 0.0;
      for (Index k = 0; k < d; ++k) {
        double* out = vl.data() + (k + 1) * stride;
        slice_t_mul(x.core(k), s.rank(k), idx[k], vl.data() + k * stride, out);
        slice_t_mul<true>(dv[u(k)], s.rank(k), idx[k], si.l(t, k), out);
      }
      vrho[u(d * stride)] = 0.0;
      for (Index k = d - 1; k >= 1; --k) {
        double* out = vrho.data() + k * stride;
        slice_mul<false>(x.core(k), s.rank(k), idx[k], vrho.data() + (k + 1) * stride, out);
        slice_mul<true>(dv[u(k)], s.rank(k), idx[k], si.rho(t, k + 1), out);
      }
      const double e = vl[u(d * stride)];
      const double z = zg[u(t)];
      for (Index k = 0; k < d; ++k) {
        const Index rl = s.rank(k), i = idx[k];
        slice_outer(acc.Ae[u(k)], rl, i, e, si.l(t, k), si.rhot(t, k + 1));
        if (k > 0) slice_outer(acc.B[u(k)], rl, i, z, vl.data() + k * stride, si.rhot(t, k + 1));
        if (k + 1 < d) slice_outer(acc.C[u(k)], rl, i, z, si.l(t, k), vrho.data() + (k + 1) * stride);
      }
    }
  };
  auto add = [](CompletionFamilies& a, const CompletionFamilies& b) {
    add_cores(a.Ae, b.Ae);
    add_cores(a.B, b.B);
    add_cores(a.C, b.C);
  };
  return reduce_chunks<CompletionFamilies>(omega.size(), zero, body, add);
}

namespace serial {

std::vector<double> entries(const TTTensor& x, const IndexSet& omega) {
  check_inputs(x, omega, u(omega.size()));
  std::vector<double> out;
  for (Index t = 0; t < omega.size(); ++t) out.push_back(tt_entry(x, omega.at(t)));
  return out;
}

std::vector<double> tangent_entries(const TTTensor& x, const std::vector<Matrix>& dv, const IndexSet& omega) {
  check_inputs(x, omega, u(omega.size()));
  const Index d = x.order();
  const Shape& s = x.shape();
  std::vector<double> out;
  for (Index t = 0; t < omega.size(); ++t) {
    // sum over the position of the variational core
    double v = 0.0;
    for (Index j = 0; j < d; ++j) {
      Eigen::RowVectorXd row = Eigen::RowVectorXd::Ones(1);
      for (Index k = 0; k < d; ++k) {
        const Index i = omega(t, k);
        if (k == j)
          row = row * dv[u(k)].middleRows(i * s.rank(k), s.rank(k));
        else
          row = row * x.slice(k, i);
      }
      v += row(0);
    }
    out.push_back(v);
  }
  return out;
}

Families three_products(const TTTensor& x, const std::vector<Matrix>& tilde, const std::vector<Matrix>& dv,
                        const IndexSet& omega, std::span<const double> z) {
  check_inputs(x, omega, z.size());
  const Index d = x.order();
  const Shape& s = x.shape();
  Families f = zero_families(s, true);
  for (Index t = 0; t < omega.size(); ++t) {
    std::vector<Vector> l(u(d + 1)), vl(u(d + 1)), rho(u(d + 1)), vrho(u(d + 1)), rhot(u(d + 1));
    l[0] = Vector::Ones(1);
    vl[0] = Vector::Zero(1);
    for (Index k = 0; k < d; ++k) {
      const Index i = omega(t, k);
      Matrix ui = x.slice(k, i);
      Matrix vi = dv[u(k)].middleRows(i * s.rank(k), s.rank(k));
      l[u(k + 1)] = ui.transpose() * l[u(k)];
      vl[u(k + 1)] = ui.transpose() * vl[u(k)] + vi.transpose() * l[u(k)];
    }
    rho[u(d)] = Vector::Ones(1);
    rhot[u(d)] = Vector::Ones(1);
    vrho[u(d)] = Vector::Zero(1);
    for (Index k = d - 1; k >= 0; --k) {
      const Index i = omega(t, k);
      Matrix ui = x.slice(k, i);
      Matrix vi = dv[u(k)].middleRows(i * s.rank(k), s.rank(k));
      Matrix ti = tilde[u(k)].middleRows(i * s.rank(k), s.rank(k));
      vrho[u(k)] = ui * vrho[u(k + 1)] + vi * rho[u(k + 1)];
      rho[u(k)] = ui * rho[u(k + 1)];
      rhot[u(k)] = ti * rhot[u(k + 1)];
    }
    for (Index k = 0; k < d; ++k) {
      const Index i = omega(t, k);
      const Index rl = s.rank(k);
      f.A[u(k)].middleRows(i * rl, rl) += z[u(t)] * l[u(k)] * rhot[u(k + 1)].transpose();
      f.B[u(k)].middleRows(i * rl, rl) += z[u(t)] * vl[u(k)] * rhot[u(k + 1)].transpose();
      f.C[u(k)].middleRows(i * rl, rl) += z[u(t)] * l[u(k)] * vrho[u(k + 1)].transpose();
    }
  }
  return f;
}

std::vector<Matrix> a_family(const TTTensor& x, const std::vector<Matrix>& tilde, const IndexSet& omega,
                             std::span<const double> z) {
  std::vector<Matrix> dv;
  for (const Matrix& c : x.cores()) dv.push_back(Matrix::Zero(c.rows(), c.cols()));
  return three_products(x, tilde, dv, omega, z).A;
}

}  // namespace serial

}  // namespace ttman::kernels
