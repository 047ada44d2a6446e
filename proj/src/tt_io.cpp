#include "ttman/tt_io.hpp"

#include <fstream>
#include <limits>

#include "ttman/binary_io.hpp"

namespace ttman {

namespace {

std::uint32_t to_u32(Index v) {
  if (v < 0 || v > std::numeric_limits<std::uint32_t>::max()) throw std::out_of_range("value does not fit u32");
  return static_cast<std::uint32_t>(v);
}

}  // namespace

void write_ttz(std::ostream& os, const TTTensor& x) {
  const Shape& s = x.shape();
  os.write("TTZ1", 4);
  binio::put(os, to_u32(s.order()));
  for (Index v : s.n) binio::put(os, to_u32(v));
  for (Index v : s.r) binio::put(os, to_u32(v));
  for (const Matrix& c : x.cores())
    os.write(reinterpret_cast<const char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double)));
  if (!os) throw std::runtime_error("write_ttz: stream error");
}

void save_ttz(const std::filesystem::path& p, const TTTensor& x) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + p.string() + " for writing");
  write_ttz(os, x);
}

TTTensor read_ttz(std::istream& is) {
  binio::expect_magic(is, "TTZ1");
  const auto d = binio::get<std::uint32_t>(is);
  if (d < 2 || d > 4096) throw std::runtime_error("read_ttz: implausible order");
  Extents n(d), r(d + 1);
  for (auto& v : n) v = binio::get<std::uint32_t>(is);
  for (auto& v : r) v = binio::get<std::uint32_t>(is);
  Shape s(n, r);
  s.require_feasible();
  std::vector<Matrix> cores;
  for (Index k = 0; k < s.order(); ++k) {
    Matrix c(s.rank(k) * s.mode(k), s.rank(k + 1));
    if (!is.read(reinterpret_cast<char*>(c.data()), static_cast<std::streamsize>(c.size() * sizeof(double))))
      throw std::runtime_error("read_ttz: truncated core data");
    cores.push_back(std::move(c));
  }
  return TTTensor(std::move(s), std::move(cores));
}

TTTensor load_ttz(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + p.string());
  return read_ttz(is);
}

}  // namespace ttman
