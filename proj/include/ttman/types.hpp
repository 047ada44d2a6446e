#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace ttman {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Mode sizes or rank tuples.
using Extents = std::vector<Index>;

/// Thrown when a decomposition turns out not to be minimal (a core flattening
/// or an R factor lost rank).
class RankDeficiencyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown when an operation would materialize a dense tensor above the
/// desk-scale element cap.
class DeskCapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Product of extents, saturating at the largest Index.
Index checked_product(const Extents& e);

}  // namespace ttman
