#pragma once

// Little-endian primitive encoding shared by the feature and checkpoint
// containers.

#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>

#include "scal/errors.hpp"

namespace scal::detail {

template <typename UInt>
void write_le(std::ostream& os, UInt v) {
  char buf[sizeof(UInt)];
  for (std::size_t i = 0; i < sizeof(UInt); ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFF);
  os.write(buf, sizeof(UInt));
}

template <typename UInt>
UInt read_le(std::istream& is) {
  unsigned char buf[sizeof(UInt)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(UInt))) throw DataError("unexpected end of file");
  UInt v = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) v |= static_cast<UInt>(buf[i]) << (8 * i);
  return v;
}

inline void write_f32(std::ostream& os, float f) { write_le(os, std::bit_cast<std::uint32_t>(f)); }
inline float read_f32(std::istream& is) { return std::bit_cast<float>(read_le<std::uint32_t>(is)); }
inline void write_f64(std::ostream& os, double f) { write_le(os, std::bit_cast<std::uint64_t>(f)); }
inline double read_f64(std::istream& is) { return std::bit_cast<double>(read_le<std::uint64_t>(is)); }

inline void write_string(std::ostream& os, const std::string& s) {
  write_le(os, static_cast<std::uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
  const auto len = read_le<std::uint32_t>(is);
  std::string s(len, '\0');
  if (len > 0 && !is.read(s.data(), len)) throw DataError("unexpected end of file in string");
  return s;
}

inline void expect_magic(std::istream& is, const char* magic) {
  const std::size_t len = std::strlen(magic);
  std::string got(len, '\0');
  if (!is.read(got.data(), static_cast<std::streamsize>(len)) || got != magic) {
    throw DataError(std::string("bad magic, expected ") + magic);
  }
}

}  // namespace scal::detail
