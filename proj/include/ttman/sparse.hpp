#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>

#include "ttman/dense.hpp"
#include "ttman/types.hpp"

namespace ttman {

/// The observed multi-index set Omega. Entries are stored row by row
/// (sample s occupies [s*d, (s+1)*d)). Indices are unique and in bounds.
class IndexSet {
 public:
  IndexSet() = default;
  /// Validates bounds and uniqueness.
  IndexSet(Extents dims, std::vector<Index> flat);

  const Extents& dims() const { return dims_; }
  Index order() const { return static_cast<Index>(dims_.size()); }
  Index size() const { return order() == 0 ? 0 : static_cast<Index>(flat_.size()) / order(); }
  Index operator()(Index s, Index k) const { return flat_[static_cast<std::size_t>(s * order() + k)]; }
  std::span<const Index> at(Index s) const {
    return {flat_.data() + s * order(), static_cast<std::size_t>(order())};
  }
  const std::vector<Index>& flat() const { return flat_; }

 private:
  Extents dims_;
  std::vector<Index> flat_;
};

/// Values on a shared index set. Sharing lets the gradient and Hessian
/// tensors of a completion problem reuse the data's Omega without copies.
class SparseTensor {
 public:
  SparseTensor() = default;
  SparseTensor(std::shared_ptr<const IndexSet> omega, std::vector<double> values);
  SparseTensor(Extents dims, std::vector<Index> flat, std::vector<double> values);

  const IndexSet& omega() const { return *omega_; }
  const std::shared_ptr<const IndexSet>& omega_ptr() const { return omega_; }
  const Extents& dims() const { return omega_->dims(); }
  Index order() const { return omega_->order(); }
  Index nnz() const { return omega_->size(); }
  const std::vector<double>& values() const { return values_; }
  std::vector<double>& values() { return values_; }

  /// Same index set, new values.
  SparseTensor with_values(std::vector<double> v) const { return SparseTensor(omega_, std::move(v)); }

  double norm() const;

  /// Dense materialization, subject to the desk cap.
  DenseTensor to_dense() const;

 private:
  std::shared_ptr<const IndexSet> omega_ = std::make_shared<const IndexSet>();
  std::vector<double> values_;
};

/// SPT1 layout: magic "SPT1", u32 d, u32 n[d], u64 nnz, then nnz records of
/// u32 index[d] (0-based) followed by f64 value, little-endian.
void write_spt(std::ostream& os, const SparseTensor& t);
void save_spt(const std::filesystem::path& p, const SparseTensor& t);
SparseTensor read_spt(std::istream& is);
SparseTensor load_spt(const std::filesystem::path& p);

}  // namespace ttman
