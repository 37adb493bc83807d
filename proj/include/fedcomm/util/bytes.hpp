#pragma once

#include <bit>
#include <cstdint>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace fedcomm {

using Bytes = std::vector<uint8_t>;
using ByteSpan = std::span<const uint8_t>;

namespace util {

inline void put_u16be(Bytes& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline void put_u32be(Bytes& out, uint32_t v) {
  out.push_back(static_cast<uint8_t>(v >> 24));
  out.push_back(static_cast<uint8_t>(v >> 16));
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

inline void put_u64be(Bytes& out, uint64_t v) {
  put_u32be(out, static_cast<uint32_t>(v >> 32));
  put_u32be(out, static_cast<uint32_t>(v));
}

inline uint16_t get_u16be(const uint8_t* p) {
  return static_cast<uint16_t>((uint16_t(p[0]) << 8) | uint16_t(p[1]));
}

inline uint32_t get_u32be(const uint8_t* p) {
  return (uint32_t(p[0]) << 24) | (uint32_t(p[1]) << 16) |
         (uint32_t(p[2]) << 8) | uint32_t(p[3]);
}

inline uint64_t get_u64be(const uint8_t* p) {
  return (uint64_t(get_u32be(p)) << 32) | uint64_t(get_u32be(p + 4));
}

inline void put_f32be(Bytes& out, float f) {
  put_u32be(out, std::bit_cast<uint32_t>(f));
}

inline float get_f32be(const uint8_t* p) {
  return std::bit_cast<float>(get_u32be(p));
}

std::string to_hex(ByteSpan data);
Bytes from_hex(const std::string& hex);

}  // namespace util
}  // namespace fedcomm
