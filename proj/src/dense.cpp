#include "ttman/dense.hpp"

#include <atomic>
#include <cstdlib>
#include <limits>
#include <string>

namespace ttman {

namespace {

std::atomic<Index> g_cap_override{0};
std::atomic<std::size_t> g_dense_allocs{0};

Index env_cap() {
  static const Index cap = [] {
    if (const char* s = std::getenv("TT_DESK_CAP")) {
      try {
        const long long v = std::stoll(s);
        if (v > 0) return static_cast<Index>(v);
      } catch (const std::exception&) {
      }
    }
    return Index{1} << 20;
  }();
  return cap;
}

}  // namespace

Index checked_product(const Extents& e) {
  Index p = 1;
  for (Index x : e) {
    if (x < 0) throw std::invalid_argument("negative extent");
    if (x != 0 && p > std::numeric_limits<Index>::max() / x) return std::numeric_limits<Index>::max();
    p *= x;
  }
  return p;
}

Index desk_cap() {
  const Index o = g_cap_override.load();
  return o > 0 ? o : env_cap();
}

void set_desk_cap(Index cap) { g_cap_override.store(cap > 0 ? cap : 0); }

std::size_t dense_allocation_count() { return g_dense_allocs.load(); }

DenseTensor::DenseTensor(Extents dims) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("DenseTensor: order must be >= 1");
  const Index n = checked_product(dims_);
  if (n > desk_cap())
    throw DeskCapError("DenseTensor: " + std::to_string(n) + " elements exceed desk cap " +
                       std::to_string(desk_cap()));
  ++g_dense_allocs;
  values_.assign(static_cast<std::size_t>(n), 0.0);
}

DenseTensor::DenseTensor(Extents dims, std::vector<double> values) : dims_(std::move(dims)) {
  if (dims_.empty()) throw std::invalid_argument("DenseTensor: order must be >= 1");
  const Index n = checked_product(dims_);
  if (n > desk_cap()) throw DeskCapError("DenseTensor: element count exceeds desk cap");
  if (static_cast<Index>(values.size()) != n)
    throw std::invalid_argument("DenseTensor: value count does not match extents");
  ++g_dense_allocs;
  values_ = std::move(values);
}

Index DenseTensor::linear(std::span<const Index> idx) const {
  if (static_cast<Index>(idx.size()) != order())
    throw std::invalid_argument("DenseTensor: index order mismatch");
  Index lin = 0;
  Index stride = 1;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (idx[k] < 0 || idx[k] >= dims_[k]) throw std::out_of_range("DenseTensor: index out of bounds");
    lin += idx[k] * stride;
    stride *= dims_[k];
  }
  return lin;
}

Extents DenseTensor::multi_index(Index lin) const {
  Extents idx(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    idx[k] = lin % dims_[k];
    lin /= dims_[k];
  }
  return idx;
}

DenseTensor& DenseTensor::operator+=(const DenseTensor& o) {
  if (o.dims_ != dims_) throw std::invalid_argument("DenseTensor: shape mismatch");
  vec() += o.vec();
  return *this;
}

DenseTensor& DenseTensor::operator-=(const DenseTensor& o) {
  if (o.dims_ != dims_) throw std::invalid_argument("DenseTensor: shape mismatch");
  vec() -= o.vec();
  return *this;
}

DenseTensor& DenseTensor::operator*=(double s) {
  vec() *= s;
  return *this;
}

DenseTensor operator+(DenseTensor a, const DenseTensor& b) { return a += b; }
DenseTensor operator-(DenseTensor a, const DenseTensor& b) { return a -= b; }
DenseTensor operator*(double s, DenseTensor a) { return a *= s; }

double dense_inner(const DenseTensor& a, const DenseTensor& b) {
  if (a.dims() != b.dims()) throw std::invalid_argument("dense_inner: shape mismatch");
  return a.vec().dot(b.vec());
}

Matrix flatten(const DenseTensor& t, Index mu) {
  const Index d = t.order();
  if (mu < 1 || mu > d - 1) throw std::out_of_range("flatten: mu must lie in [1, d-1]");
  Index rows = 1;
  for (Index k = 0; k < mu; ++k) rows *= t.dims()[static_cast<std::size_t>(k)];
  return Eigen::Map<const Matrix>(t.vec().data(), rows, t.size() / rows);
}

DenseTensor unflatten(const Matrix& m, const Extents& dims) {
  Index rows = 1;
  bool prefix = m.rows() == 1;
  for (Index x : dims) {
    rows *= x;
    if (rows == m.rows()) prefix = true;
  }
  if (!prefix || m.size() != checked_product(dims))
    throw std::invalid_argument("unflatten: matrix extents do not match a flattening of dims");
  std::vector<double> v(m.data(), m.data() + m.size());
  return DenseTensor(dims, std::move(v));
}

DenseTensor random_dense(const Extents& dims, std::mt19937_64& rng) {
  DenseTensor t(dims);
  std::normal_distribution<double> normal;
  for (Index i = 0; i < t.size(); ++i) t[i] = normal(rng);
  return t;
}

}  // namespace ttman
