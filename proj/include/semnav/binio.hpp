#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <type_traits>

#include "semnav/common.hpp"

// Small helpers shared by the binary file formats (datasets, weight files).
// All multi-byte values are little-endian; common.hpp rejects big-endian
// hosts at compile time, so plain memory writes are portable here.

namespace semnav::detail {

template <class T>
void write_pod(std::ostream& out, T v) {
  static_assert(std::is_trivially_copyable_v<T>);
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

template <class T>
T read_pod(std::istream& in, const char* what) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(v));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(v)))
    throw FormatError(std::string("truncated file while reading ") + what +
                      ": expected " + std::to_string(sizeof(v)) +
                      " bytes, got " + std::to_string(in.gcount()));
  return v;
}

inline void read_exact(std::istream& in, void* dst, std::size_t n,
                       const char* what) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n))
    throw FormatError(std::string("truncated file while reading ") + what +
                      ": expected " + std::to_string(n) + " bytes, got " +
                      std::to_string(in.gcount()));
}

// CRC-32 (reflected, polynomial 0xEDB88320), as used by zip/png. Guards the
// payload of weight files against silent corruption.
inline std::uint32_t crc32(const void* data, std::size_t n,
                           std::uint32_t crc = 0) {
  static const auto table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  const auto* p = static_cast<const std::uint8_t*>(data);
  crc ^= 0xFFFFFFFFu;
  for (std::size_t i = 0; i < n; ++i) crc = table[(crc ^ p[i]) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

}  // namespace semnav::detail
