#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>

namespace panosphere {
namespace binio {

inline void write_u32_le(std::ostream& os, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  os.write(reinterpret_cast<const char*>(b), 4);
}

inline std::uint32_t read_u32_le(std::istream& is) {
  unsigned char b[4] = {0, 0, 0, 0};
  is.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) |
         (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) |
         (static_cast<std::uint32_t>(b[3]) << 24);
}

inline void write_u64_le(std::ostream& os, std::uint64_t v) {
  write_u32_le(os, static_cast<std::uint32_t>(v & 0xffffffffull));
  write_u32_le(os, static_cast<std::uint32_t>(v >> 32));
}

inline std::uint64_t read_u64_le(std::istream& is) {
  std::uint64_t lo = read_u32_le(is);
  std::uint64_t hi = read_u32_le(is);
  return lo | (hi << 32);
}

inline void write_f32_le(std::ostream& os, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  write_u32_le(os, bits);
}

inline float read_f32_le(std::istream& is) {
  std::uint32_t bits = read_u32_le(is);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

inline void write_f64_le(std::ostream& os, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  write_u64_le(os, bits);
}

inline double read_f64_le(std::istream& is) {
  std::uint64_t bits = read_u64_le(is);
  double v;
  std::memcpy(&v, &bits, 8);
  return v;
}

}  // namespace binio
}  // namespace panosphere
