#pragma once

// Little-endian primitives shared by the binary artifact formats.

#include "pcm/error.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

namespace pcm::detail {

template <typename UInt>
void put_le(std::ostream& out, UInt value) {
  std::array<char, sizeof(UInt)> bytes{};
  for (std::size_t b = 0; b < sizeof(UInt); ++b) bytes[b] = static_cast<char>((value >> (8 * b)) & 0xFFu);
  out.write(bytes.data(), bytes.size());
}

inline void put_u32(std::ostream& out, std::uint32_t v) { put_le(out, v); }
inline void put_u64(std::ostream& out, std::uint64_t v) { put_le(out, v); }
inline void put_f32(std::ostream& out, float v) { put_le(out, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }
inline void put_magic(std::ostream& out, std::string_view magic) { out.write(magic.data(), std::streamsize(magic.size())); }

template <typename UInt>
UInt get_le(std::istream& in, std::string_view what) {
  std::array<unsigned char, sizeof(UInt)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw FormatError("truncated input while reading " + std::string(what));
  UInt value = 0;
  for (std::size_t b = 0; b < sizeof(UInt); ++b) value |= UInt(bytes[b]) << (8 * b);
  return value;
}

inline std::uint32_t get_u32(std::istream& in, std::string_view what) { return get_le<std::uint32_t>(in, what); }
inline std::uint64_t get_u64(std::istream& in, std::string_view what) { return get_le<std::uint64_t>(in, what); }
inline float get_f32(std::istream& in, std::string_view what) { return std::bit_cast<float>(get_u32(in, what)); }
inline double get_f64(std::istream& in, std::string_view what) { return std::bit_cast<double>(get_u64(in, what)); }

inline void expect_magic(std::istream& in, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!in.read(got.data(), std::streamsize(got.size())) || got != magic)
    throw FormatError("bad magic: expected \"" + std::string(magic) + "\"");
}

inline void expect_version(std::istream& in, std::uint32_t version) {
  const auto got = get_u32(in, "version");
  if (got != version) throw FormatError("unsupported version " + std::to_string(got));
}

}  // namespace pcm::detail
