#pragma once

// Database-archive compression: greedy LZ77 tokenization followed by an
// adaptive binary range coder. Constants are sized so the guest decoder fits
// a 32 KiB DynaRisc memory: window 8192, match 3..258, 12-bit probabilities,
// update shift 5, 24-bit renormalization threshold.

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ule/bitcore.hpp"
#include "ule/error.hpp"

namespace ule::dbcoder {

inline constexpr int kWindowSize = 8192;
inline constexpr int kMinMatch = 3;
inline constexpr int kMaxMatch = 258;
inline constexpr uint16_t kProbOne = 4096;   // 12-bit probability scale
inline constexpr uint16_t kProbInit = 2048;
inline constexpr int kProbShift = 5;
inline constexpr uint32_t kRcTop = 1u << 24;

struct Lz77Token {
  bool is_match = false;
  uint8_t literal = 0;
  uint16_t length = 0;    // 3..258
  uint16_t distance = 0;  // 1..8192

  static Lz77Token lit(uint8_t v) { return {false, v, 0, 0}; }
  static Lz77Token match(uint16_t len, uint16_t dist) { return {true, 0, len, dist}; }
  bool operator==(const Lz77Token&) const = default;
};

// Greedy longest-match parse; ties broken by smallest distance.
inline std::vector<Lz77Token> lz77_parse(std::span<const uint8_t> data) {
  std::vector<Lz77Token> tokens;
  const size_t n = data.size();
  if (n == 0) return tokens;

  constexpr int kHashBits = 15;
  constexpr size_t kHashSize = size_t(1) << kHashBits;
  auto hash3 = [&](size_t i) {
    return ((uint32_t(data[i]) << 10) ^ (uint32_t(data[i + 1]) << 5) ^ data[i + 2]) &
           (kHashSize - 1);
  };
  std::vector<int64_t> head(kHashSize, -1);
  std::vector<int64_t> chain(n, -1);
  auto insert = [&](size_t i) {
    if (i + kMinMatch > n) return;
    uint32_t h = hash3(i);
    chain[i] = head[h];
    head[h] = int64_t(i);
  };

  size_t pos = 0;
  while (pos < n) {
    size_t best_len = 0, best_dist = 0;
    if (pos + kMinMatch <= n) {
      const size_t limit = std::min<size_t>(kMaxMatch, n - pos);
      int64_t cand = head[hash3(pos)];
      while (cand >= 0 && pos - size_t(cand) <= kWindowSize) {
        const size_t dist = pos - size_t(cand);
        size_t len = 0;
        while (len < limit && data[size_t(cand) + len] == data[pos + len]) ++len;
        if (len > best_len) {  // strict: nearest candidate wins ties
          best_len = len;
          best_dist = dist;
          if (len == limit) break;
        }
        cand = chain[cand];
      }
    }
    if (best_len >= kMinMatch) {
      tokens.push_back(Lz77Token::match(uint16_t(best_len), uint16_t(best_dist)));
      for (size_t i = 0; i < best_len; ++i) insert(pos + i);
      pos += best_len;
    } else {
      tokens.push_back(Lz77Token::lit(data[pos]));
      insert(pos);
      ++pos;
    }
  }
  return tokens;
}

inline Bytes lz77_expand(const std::vector<Lz77Token>& tokens) {
  Bytes out;
  for (const auto& t : tokens) {
    if (!t.is_match) {
      out.push_back(t.literal);
      continue;
    }
    require(t.distance >= 1 && t.distance <= out.size(), Errc::malformed_stream,
            "lz77: match distance before stream start");
    require(t.length >= kMinMatch && t.length <= kMaxMatch, Errc::malformed_stream,
            "lz77: match length out of range");
    size_t from = out.size() - t.distance;
    for (uint16_t i = 0; i < t.length; ++i) out.push_back(out[from + i]);
  }
  return out;
}

// Adaptive probability state: p is the chance of bit 0, in [1, 4095].
inline void prob_update(uint16_t& p, int bit) {
  if (bit == 0)
    p = uint16_t(p + ((kProbOne - p) >> kProbShift));
  else
    p = uint16_t(p - (p >> kProbShift));
}

class RcEncoder {
 public:
  void encode_bit(uint16_t& p, int bit) {
    uint32_t bound = (range_ >> 12) * p;
    if (bit == 0) {
      range_ = bound;
    } else {
      low_ += bound;
      range_ -= bound;
    }
    prob_update(p, bit);
    while (range_ < kRcTop) {
      shift_low();
      range_ <<= 8;
    }
  }

  Bytes finish() {
    for (int i = 0; i < 4; ++i) shift_low();
    return std::move(out_);
  }

 private:
  void shift_low() {
    if (low_ >> 32) {  // propagate carry into already-emitted octets
      for (size_t i = out_.size(); i-- > 0;)
        if (++out_[i] != 0) break;
    }
    out_.push_back(uint8_t(low_ >> 24));
    low_ = (low_ << 8) & 0xFFFFFFFFull;
  }

  uint64_t low_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  Bytes out_;
};

class RcDecoder {
 public:
  explicit RcDecoder(std::span<const uint8_t> coded) : src_(coded) {
    for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_octet();
  }

  int decode_bit(uint16_t& p) {
    uint32_t bound = (range_ >> 12) * p;
    int bit;
    if (code_ < bound) {
      bit = 0;
      range_ = bound;
    } else {
      bit = 1;
      code_ -= bound;
      range_ -= bound;
    }
    prob_update(p, bit);
    while (range_ < kRcTop) {
      code_ = (code_ << 8) | next_octet();
      range_ <<= 8;
    }
    return bit;
  }

 private:
  uint8_t next_octet() { return pos_ < src_.size() ? src_[pos_++] : 0x00; }

  std::span<const uint8_t> src_;
  size_t pos_ = 0;
  uint32_t range_ = 0xFFFFFFFFu;
  uint32_t code_ = 0;
};

// Shared encoder/decoder model; both sides must evolve identically.
struct CoderModel {
  uint16_t p_match = kProbInit;
  std::array<uint16_t, 256> literal_tree;    // nodes 1..255
  std::array<uint16_t, 256> length_tree;     // nodes 1..255
  std::vector<uint16_t> distance_tree;       // nodes 1..8191

  CoderModel() : distance_tree(8192, kProbInit) {
    literal_tree.fill(kProbInit);
    length_tree.fill(kProbInit);
  }
};

namespace detail {

template <typename Slots>
inline void tree_encode(RcEncoder& enc, Slots& slots, int nbits, uint32_t value) {
  uint32_t node = 1;
  for (int i = nbits - 1; i >= 0; --i) {
    int bit = (value >> i) & 1;
    enc.encode_bit(slots[node], bit);
    node = node * 2 + bit;
  }
}

template <typename Slots>
inline uint32_t tree_decode(RcDecoder& dec, Slots& slots, int nbits) {
  uint32_t node = 1;
  for (int i = 0; i < nbits; ++i) node = node * 2 + dec.decode_bit(slots[node]);
  return node - (1u << nbits);
}

}  // namespace detail

struct ArchiveContainer {
  static constexpr std::array<uint8_t, 4> kMagic{'U', 'L', 'D', 'B'};
  static constexpr uint8_t kVersion = 1;
  static constexpr size_t kHeaderSize = 13;

  uint32_t original_length = 0;
  uint32_t checksum = 0;  // crc32 of the original data
  Bytes coded;

  Bytes to_bytes() const {
    Bytes out;
    out.reserve(kHeaderSize + coded.size());
    out.insert(out.end(), kMagic.begin(), kMagic.end());
    out.push_back(kVersion);
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(original_length >> (8 * i)));
    for (int i = 0; i < 4; ++i) out.push_back(uint8_t(checksum >> (8 * i)));
    out.insert(out.end(), coded.begin(), coded.end());
    return out;
  }

  static ArchiveContainer from_bytes(std::span<const uint8_t> raw) {
    require(raw.size() >= kHeaderSize, Errc::format_error, "container: truncated header");
    require(std::equal(kMagic.begin(), kMagic.end(), raw.begin()), Errc::format_error,
            "container: bad magic");
    require(raw[4] == kVersion, Errc::format_error, "container: unsupported version");
    ArchiveContainer c;
    for (int i = 3; i >= 0; --i) c.original_length = (c.original_length << 8) | raw[5 + i];
    for (int i = 3; i >= 0; --i) c.checksum = (c.checksum << 8) | raw[9 + i];
    c.coded.assign(raw.begin() + kHeaderSize, raw.end());
    return c;
  }
};

inline ArchiveContainer compress(std::span<const uint8_t> data) {
  require(data.size() < (uint64_t(1) << 32), Errc::length_error, "compress: input too large");
  ArchiveContainer container;
  container.original_length = uint32_t(data.size());
  container.checksum = bitcore::crc32(data);
  auto tokens = lz77_parse(data);
  if (!tokens.empty()) {
    RcEncoder enc;
    CoderModel m;
    for (const auto& t : tokens) {
      enc.encode_bit(m.p_match, t.is_match ? 1 : 0);
      if (!t.is_match) {
        detail::tree_encode(enc, m.literal_tree, 8, t.literal);
      } else {
        detail::tree_encode(enc, m.length_tree, 8, uint32_t(t.length - kMinMatch));
        detail::tree_encode(enc, m.distance_tree, 13, uint32_t(t.distance - 1));
      }
    }
    container.coded = enc.finish();
  }
  return container;
}

inline Bytes decompress(const ArchiveContainer& container) {
  Bytes out;
  out.reserve(container.original_length);
  if (container.original_length > 0) {
    RcDecoder dec(container.coded);
    CoderModel m;
    while (out.size() < container.original_length) {
      if (dec.decode_bit(m.p_match) == 0) {
        out.push_back(uint8_t(detail::tree_decode(dec, m.literal_tree, 8)));
      } else {
        uint32_t len = detail::tree_decode(dec, m.length_tree, 8) + kMinMatch;
        uint32_t dist = detail::tree_decode(dec, m.distance_tree, 13) + 1;
        require(dist <= out.size(), Errc::malformed_stream,
                "decompress: match distance before stream start");
        size_t from = out.size() - dist;
        for (uint32_t i = 0; i < len && out.size() < container.original_length; ++i)
          out.push_back(out[from + i]);
      }
    }
  }
  require(bitcore::crc32(out) == container.checksum, Errc::corruption_error,
          "decompress: checksum mismatch");
  return out;
}

inline Bytes decompress(std::span<const uint8_t> raw) {
  return decompress(ArchiveContainer::from_bytes(raw));
}

}  // namespace ule::dbcoder
