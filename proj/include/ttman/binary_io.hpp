#pragma once

// Little-endian scalar helpers for the TTZ1 and SPT1 formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace ttman::binio {

static_assert(std::endian::native == std::endian::little, "binary formats assume a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& is) {
  T v{};
  if (!is.read(reinterpret_cast<char*>(&v), sizeof(T))) throw std::runtime_error("unexpected end of file");
  return v;
}

inline void expect_magic(std::istream& is, const char (&magic)[5]) {
  char buf[4];
  if (!is.read(buf, 4) || std::memcmp(buf, magic, 4) != 0)
    throw std::runtime_error(std::string("bad magic, expected ") + magic);
}

}  // namespace ttman::binio
