#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <type_traits>

#include "evseg/error.hpp"

namespace evseg::detail {

// Little-endian scalar (de)serialization, independent of host byte order.
template <typename T>
  requires std::is_arithmetic_v<T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  auto bits = std::bit_cast<U>(value);
  std::array<char, sizeof(T)> buf{};
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<char>((static_cast<std::uint64_t>(bits) >> (8 * i)) & 0xFFu);
  }
  out.write(buf.data(), buf.size());
}

template <typename T>
  requires std::is_arithmetic_v<T>
T get_le(const unsigned char* p) {
  using U = std::conditional_t<sizeof(T) == 1, std::uint8_t,
            std::conditional_t<sizeof(T) == 2, std::uint16_t,
            std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>>>;
  std::uint64_t bits = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  }
  return std::bit_cast<T>(static_cast<U>(bits));
}

inline void put_bytes(std::ostream& out, const char* data, std::size_t n) {
  out.write(data, static_cast<std::streamsize>(n));
}

// Reads exactly n bytes; returns the number actually read.
inline std::size_t read_up_to(std::istream& in, unsigned char* dst, std::size_t n) {
  in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
  return static_cast<std::size_t>(in.gcount());
}

inline void check_sink(const std::ostream& out, const char* what) {
  if (!out) throw Error(Errc::Io, std::string("write failed: ") + what);
}

}  // namespace evseg::detail
