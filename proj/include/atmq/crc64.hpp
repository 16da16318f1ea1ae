#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace atmq {

// CRC-64/XZ (ECMA-182 polynomial, reflected, init and xorout all-ones).
// Used for the sample-file trailer and for config hashing.
namespace detail {

inline const std::array<std::uint64_t, 256>& crc64_table() {
  static const std::array<std::uint64_t, 256> table = [] {
    std::array<std::uint64_t, 256> t{};
    const std::uint64_t poly = 0xC96C5795D7870F42ull;  // reflected 0x42F0E1EBA9EA3693
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint64_t c = i;
      for (int bit = 0; bit < 8; ++bit) c = (c & 1) ? (c >> 1) ^ poly : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

}  // namespace detail

class Crc64 {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    const auto& t = detail::crc64_table();
    for (std::size_t i = 0; i < len; ++i)
      state_ = t[(state_ ^ p[i]) & 0xFF] ^ (state_ >> 8);
  }
  std::uint64_t value() const { return ~state_; }

 private:
  std::uint64_t state_ = ~0ull;
};

inline std::uint64_t crc64(const void* data, std::size_t len) {
  Crc64 c;
  c.update(data, len);
  return c.value();
}

}  // namespace atmq
