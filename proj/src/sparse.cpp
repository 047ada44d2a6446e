#include "ttman/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "ttman/binary_io.hpp"

namespace ttman {

IndexSet::IndexSet(Extents dims, std::vector<Index> flat) : dims_(std::move(dims)), flat_(std::move(flat)) {
  const Index d = order();
  if (d < 1) throw std::invalid_argument("IndexSet: order must be >= 1");
  if (static_cast<Index>(flat_.size()) % d != 0) throw std::invalid_argument("IndexSet: ragged index list");
  for (Index s = 0; s < size(); ++s)
    for (Index k = 0; k < d; ++k) {
      const Index v = (*this)(s, k);
      if (v < 0 || v >= dims_[static_cast<std::size_t>(k)])
        throw std::out_of_range("IndexSet: index " + std::to_string(v) + " out of bounds in mode " +
                                std::to_string(k));
    }
  std::vector<Index> perm(static_cast<std::size_t>(size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  auto less = [&](Index a, Index b) {
    return std::lexicographical_compare(flat_.begin() + a * d, flat_.begin() + (a + 1) * d, flat_.begin() + b * d,
                                        flat_.begin() + (b + 1) * d);
  };
  std::sort(perm.begin(), perm.end(), less);
  for (std::size_t s = 1; s < perm.size(); ++s)
    if (!less(perm[s - 1], perm[s])) throw std::invalid_argument("IndexSet: duplicate multi-index");
}

SparseTensor::SparseTensor(std::shared_ptr<const IndexSet> omega, std::vector<double> values)
    : omega_(std::move(omega)), values_(std::move(values)) {
  if (!omega_) throw std::invalid_argument("SparseTensor: null index set");
  if (static_cast<Index>(values_.size()) != omega_->size())
    throw std::invalid_argument("SparseTensor: value count does not match index count");
}

SparseTensor::SparseTensor(Extents dims, std::vector<Index> flat, std::vector<double> values)
    : SparseTensor(std::make_shared<const IndexSet>(std::move(dims), std::move(flat)), std::move(values)) {}

double SparseTensor::norm() const {
  double s = 0.0;
  for (double v : values_) s += v * v;
  return std::sqrt(s);
}

DenseTensor SparseTensor::to_dense() const {
  DenseTensor t(dims());
  for (Index s = 0; s < nnz(); ++s) t(omega_->at(s)) = values_[static_cast<std::size_t>(s)];
  return t;
}

void write_spt(std::ostream& os, const SparseTensor& t) {
  os.write("SPT1", 4);
  binio::put(os, static_cast<std::uint32_t>(t.order()));
  for (Index v : t.dims()) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw std::out_of_range("write_spt: mode too large");
    binio::put(os, static_cast<std::uint32_t>(v));
  }
  binio::put(os, static_cast<std::uint64_t>(t.nnz()));
  for (Index s = 0; s < t.nnz(); ++s) {
    for (Index k = 0; k < t.order(); ++k) binio::put(os, static_cast<std::uint32_t>(t.omega()(s, k)));
    binio::put(os, t.values()[static_cast<std::size_t>(s)]);
  }
  if (!os) throw std::runtime_error("write_spt: stream error");
}

void save_spt(const std::filesystem::path& p, const SparseTensor& t) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  write_spt(os, t);
}

SparseTensor read_spt(std::istream& is) {
  binio::expect_magic(is, "SPT1");
  const auto d = binio::get<std::uint32_t>(is);
  if (d < 1 || d > 4096) throw std::runtime_error("read_spt: implausible order");
  Extents n(d);
  for (auto& v : n) v = binio::get<std::uint32_t>(is);
  const auto nnz = binio::get<std::uint64_t>(is);
  if (nnz > (std::uint64_t{1} << 40)) throw std::runtime_error("read_spt: implausible nnz");
  std::vector<Index> flat;
  std::vector<double> values;
  flat.reserve(static_cast<std::size_t>(nnz) * d);
  values.reserve(static_cast<std::size_t>(nnz));
  for (std::uint64_t s = 0; s < nnz; ++s) {
    for (std::uint32_t k = 0; k < d; ++k) flat.push_back(binio::get<std::uint32_t>(is));
    values.push_back(binio::get<double>(is));
  }
  return SparseTensor(std::move(n), std::move(flat), std::move(values));
}

SparseTensor load_spt(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return read_spt(is);
}

}  // namespace ttman
