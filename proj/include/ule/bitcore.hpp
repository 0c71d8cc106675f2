#pragma once

// Bit packing/unpacking and CRC32 shared by all codecs.
// Convention: MSB-first within each octet; partial final octets are
// zero-padded in the low bits.

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "ule/error.hpp"

namespace ule {

using Bytes = std::vector<uint8_t>;

namespace bitcore {

using Bit = uint8_t;  // 0 or 1
using BitSequence = std::vector<Bit>;

inline Bytes pack_bits(const BitSequence& bits) {
  Bytes out((bits.size() + 7) / 8, 0);
  for (size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) out[i >> 3] |= uint8_t(0x80u >> (i & 7));
  }
  return out;
}

inline BitSequence unpack_bits(std::span<const uint8_t> bytes, size_t n) {
  require(n <= bytes.size() * 8, Errc::length_error, "unpack_bits: n exceeds available bits");
  BitSequence out(n);
  for (size_t i = 0; i < n; ++i) out[i] = (bytes[i >> 3] >> (7 - (i & 7))) & 1u;
  return out;
}

namespace detail {
inline const std::array<uint32_t, 256>& crc32_table() {
  static const std::array<uint32_t, 256> table = [] {
    std::array<uint32_t, 256> t{};
    for (uint32_t n = 0; n < 256; ++n) {
      uint32_t c = n;
      for (int k = 0; k < 8; ++k) c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
      t[n] = c;
    }
    return t;
  }();
  return table;
}
}  // namespace detail

// CRC-32/ISO-HDLC: reflected, poly 0xEDB88320, init and final xor 0xFFFFFFFF.
inline uint32_t crc32(std::span<const uint8_t> bytes) {
  const auto& t = detail::crc32_table();
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : bytes) c = t[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

inline uint32_t crc32(const Bytes& bytes) { return crc32(std::span<const uint8_t>(bytes)); }

}  // namespace bitcore
}  // namespace ule
