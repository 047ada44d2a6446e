#pragma once

#include <filesystem>
#include <iosfwd>

#include "ttman/tt.hpp"

namespace ttman {

/// TTZ1 layout: magic "TTZ1", u32 d, u32 n[d], u32 r[d+1], then every core as
/// little-endian f64 in storage order (left flattening, column-major).
void write_ttz(std::ostream& os, const TTTensor& x);
void save_ttz(const std::filesystem::path& p, const TTTensor& x);

/// Throws std::runtime_error on malformed input and std::invalid_argument when
/// the stored shape is not a feasible TT shape.
TTTensor read_ttz(std::istream& is);
TTTensor load_ttz(const std::filesystem::path& p);

}  // namespace ttman
