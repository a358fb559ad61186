#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

#include "adaptlab/common.hpp"

// Little-endian primitives shared by the embedding and checkpoint containers.

namespace adaptlab::detail {

inline void put_u32(std::ostream& out, std::uint32_t value) {
  unsigned char bytes[4];
  bytes[0] = static_cast<unsigned char>(value & 0xFF);
  bytes[1] = static_cast<unsigned char>((value >> 8) & 0xFF);
  bytes[2] = static_cast<unsigned char>((value >> 16) & 0xFF);
  bytes[3] = static_cast<unsigned char>((value >> 24) & 0xFF);
  out.write(reinterpret_cast<const char*>(bytes), 4);
}

inline void put_f32(std::ostream& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, 4);
  put_u32(out, bits);
}

inline bool get_u32(std::istream& in, std::uint32_t& value) {
  unsigned char bytes[4];
  if (!in.read(reinterpret_cast<char*>(bytes), 4)) {
    return false;
  }
  value = static_cast<std::uint32_t>(bytes[0]) |
          (static_cast<std::uint32_t>(bytes[1]) << 8) |
          (static_cast<std::uint32_t>(bytes[2]) << 16) |
          (static_cast<std::uint32_t>(bytes[3]) << 24);
  return true;
}

inline bool get_f32(std::istream& in, float& value) {
  std::uint32_t bits = 0;
  if (!get_u32(in, bits)) {
    return false;
  }
  std::memcpy(&value, &bits, 4);
  return true;
}

}  // namespace adaptlab::detail
