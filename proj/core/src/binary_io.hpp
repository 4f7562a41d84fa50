#pragma once

// Little-endian primitives for the model container.

#include <bit>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

#include "selfcare/errors.hpp"

namespace selfcare::detail {

template <typename U>
void put_uint(std::ostream& out, U v) {
  unsigned char buf[sizeof(U)];
  for (std::size_t i = 0; i < sizeof(U); ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xFFu);
  out.write(reinterpret_cast<const char*>(buf), sizeof(U));
}

template <typename U>
U get_uint(std::istream& in) {
  unsigned char buf[sizeof(U)];
  if (!in.read(reinterpret_cast<char*>(buf), sizeof(U))) throw FormatError("model container truncated");
  U v = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) v |= static_cast<U>(static_cast<U>(buf[i]) << (8 * i));
  return v;
}

inline void put_u8(std::ostream& o, std::uint8_t v) { put_uint(o, v); }
inline void put_u16(std::ostream& o, std::uint16_t v) { put_uint(o, v); }
inline void put_u32(std::ostream& o, std::uint32_t v) { put_uint(o, v); }
inline void put_u64(std::ostream& o, std::uint64_t v) { put_uint(o, v); }
inline void put_i32(std::ostream& o, std::int32_t v) { put_uint(o, std::bit_cast<std::uint32_t>(v)); }
inline void put_f64(std::ostream& o, double v) { put_uint(o, std::bit_cast<std::uint64_t>(v)); }

inline std::uint8_t get_u8(std::istream& i) { return get_uint<std::uint8_t>(i); }
inline std::uint16_t get_u16(std::istream& i) { return get_uint<std::uint16_t>(i); }
inline std::uint32_t get_u32(std::istream& i) { return get_uint<std::uint32_t>(i); }
inline std::uint64_t get_u64(std::istream& i) { return get_uint<std::uint64_t>(i); }
inline std::int32_t get_i32(std::istream& i) { return std::bit_cast<std::int32_t>(get_uint<std::uint32_t>(i)); }
inline double get_f64(std::istream& i) { return std::bit_cast<double>(get_uint<std::uint64_t>(i)); }

// Guards element counts read from untrusted input before allocating.
inline std::uint32_t get_count(std::istream& in, std::uint32_t limit, const char* what) {
  const auto n = get_u32(in);
  if (n > limit) throw FormatError(std::string("model container: implausible ") + what + " count");
  return n;
}

}  // namespace selfcare::detail
