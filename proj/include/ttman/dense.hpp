#pragma once

#include <cstddef>
#include <random>
#include <span>

#include "ttman/types.hpp"

namespace ttman {

/// Maximum number of elements a dense tensor may hold. Defaults to 2^20 and
/// is overridden by the TT_DESK_CAP environment variable.
Index desk_cap();

/// Override the cap for the current process (tests). A value <= 0 restores
/// the environment/default value.
void set_desk_cap(Index cap);

/// Number of DenseTensor buffers allocated so far by this process. Used by
/// guards asserting that sparse code paths never densify.
std::size_t dense_allocation_count();

/// Order-d tensor stored with colexicographic linear order (first index
/// fastest), so every flattening is a plain column-major reshape.
class DenseTensor {
 public:
  DenseTensor() = default;
  /// Zero-filled tensor. Throws DeskCapError above the cap.
  explicit DenseTensor(Extents dims);
  DenseTensor(Extents dims, std::vector<double> values);

  const Extents& dims() const { return dims_; }
  Index order() const { return static_cast<Index>(dims_.size()); }
  Index size() const { return static_cast<Index>(values_.size()); }

  double& operator()(std::span<const Index> idx) { return values_[linear(idx)]; }
  double operator()(std::span<const Index> idx) const { return values_[linear(idx)]; }
  double& operator[](Index lin) { return values_[static_cast<std::size_t>(lin)]; }
  double operator[](Index lin) const { return values_[static_cast<std::size_t>(lin)]; }

  Index linear(std::span<const Index> idx) const;
  /// Inverse of linear().
  Extents multi_index(Index lin) const;

  Eigen::Map<Vector> vec() { return {values_.data(), size()}; }
  Eigen::Map<const Vector> vec() const { return {values_.data(), size()}; }

  double norm() const { return vec().norm(); }

  DenseTensor& operator+=(const DenseTensor& o);
  DenseTensor& operator-=(const DenseTensor& o);
  DenseTensor& operator*=(double s);

 private:
  Extents dims_;
  std::vector<double> values_;
};

DenseTensor operator+(DenseTensor a, const DenseTensor& b);
DenseTensor operator-(DenseTensor a, const DenseTensor& b);
DenseTensor operator*(double s, DenseTensor a);
double dense_inner(const DenseTensor& a, const DenseTensor& b);

/// I.i.d. standard normal entries.
DenseTensor random_dense(const Extents& dims, std::mt19937_64& rng);

/// mu-th flattening (1 <= mu <= d-1): rows enumerate (i_1..i_mu), columns
/// enumerate (i_{mu+1}..i_d), both colexicographically.
Matrix flatten(const DenseTensor& t, Index mu);

/// Inverse of flatten for the given mode sizes.
DenseTensor unflatten(const Matrix& m, const Extents& dims);

}  // namespace ttman
