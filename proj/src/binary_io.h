#pragma once

// Little-endian primitives shared by the binary grid formats.

#include "nvs/error.h"

#include <array>
#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>

namespace nvs::detail {

inline void write_u32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                              static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b.data(), 4);
}

inline std::uint32_t read_u32(std::istream& in, std::string_view what) {
  std::array<unsigned char, 4> b{};
  if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": truncated header");
  }
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

inline void write_f32s(std::ostream& out, std::span<const float> values) {
  for (float f : values) write_u32(out, std::bit_cast<std::uint32_t>(f));
}

inline void read_f32s(std::istream& in, std::span<float> values, std::string_view what) {
  for (float& f : values) {
    std::array<unsigned char, 4> b{};
    if (!in.read(reinterpret_cast<char*>(b.data()), 4)) {
      throw Error(ErrorCode::ParseError, std::string(what) + ": truncated payload");
    }
    f = std::bit_cast<float>(std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
                             (std::uint32_t{b[3]} << 24));
  }
}

inline void expect_magic(std::istream& in, std::string_view magic, std::string_view what) {
  std::array<char, 4> m{};
  if (!in.read(m.data(), 4) || std::string_view(m.data(), 4) != magic) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": bad magic, expected " + std::string(magic));
  }
}

// Guards allocations driven by untrusted headers.
inline void check_dims(std::uint64_t w, std::uint64_t h, std::uint64_t c, std::string_view what) {
  constexpr std::uint64_t kMaxSide = 1u << 15;
  if (w == 0 || h == 0 || c == 0 || w > kMaxSide || h > kMaxSide || c > 4096 || w * h * c > (1ull << 31)) {
    throw Error(ErrorCode::ParseError, std::string(what) + ": implausible dimensions");
  }
}

}  // namespace nvs::detail
