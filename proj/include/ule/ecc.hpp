#pragma once

// GF(256) arithmetic and Reed-Solomon codecs: the inner RS(255,223)
// errors-and-erasures code and the outer (k+3, k) erasure code spanning
// emblem groups. Field: reduction polynomial 0x11D, generator alpha = 0x02,
// code generator roots alpha^0 .. alpha^(t-1).

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "ule/bitcore.hpp"
#include "ule/error.hpp"

namespace ule::ecc {

inline constexpr int kInnerData = 223;
inline constexpr int kInnerParity = 32;
inline constexpr int kInnerCodeword = 255;
inline constexpr int kOuterParity = 3;
inline constexpr int kOuterMaxData = 17;

namespace gf {

struct Tables {
  std::array<uint8_t, 255> alog{};  // alog[i] = alpha^i
  std::array<uint8_t, 256> log{};   // log[alog[i]] = i, log[0] unused
};

inline const Tables& tables() {
  static const Tables t = [] {
    Tables tt{};
    uint16_t x = 1;
    for (int i = 0; i < 255; ++i) {
      tt.alog[i] = uint8_t(x);
      tt.log[x] = uint8_t(i);
      x <<= 1;
      if (x & 0x100) x ^= 0x11D;
    }
    return tt;
  }();
  return t;
}

inline uint8_t add(uint8_t a, uint8_t b) { return a ^ b; }

inline uint8_t mul(uint8_t a, uint8_t b) {
  if (a == 0 || b == 0) return 0;
  const Tables& t = tables();
  int s = t.log[a] + t.log[b];
  if (s >= 255) s -= 255;
  return t.alog[s];
}

inline uint8_t inv(uint8_t a) {
  require(a != 0, Errc::length_error, "gf inverse of zero");
  const Tables& t = tables();
  return t.alog[(255 - t.log[a]) % 255];
}

inline uint8_t div(uint8_t a, uint8_t b) { return mul(a, inv(b)); }

inline uint8_t pow_alpha(int e) {
  int s = e % 255;
  if (s < 0) s += 255;
  return tables().alog[s];
}

}  // namespace gf

inline uint8_t gf_mul(uint8_t a, uint8_t b) { return gf::mul(a, b); }
inline uint8_t gf_inv(uint8_t a) { return gf::inv(a); }

// Polynomials are coefficient vectors in ascending degree order.
namespace poly {

inline std::vector<uint8_t> mul(const std::vector<uint8_t>& a, const std::vector<uint8_t>& b) {
  std::vector<uint8_t> r(a.size() + b.size() - 1, 0);
  for (size_t i = 0; i < a.size(); ++i)
    for (size_t j = 0; j < b.size(); ++j) r[i + j] ^= gf::mul(a[i], b[j]);
  return r;
}

inline uint8_t eval(const std::vector<uint8_t>& p, uint8_t x) {
  uint8_t acc = 0;
  for (size_t i = p.size(); i-- > 0;) acc = uint8_t(gf::mul(acc, x) ^ p[i]);
  return acc;
}

inline void trim(std::vector<uint8_t>& p) {
  while (!p.empty() && p.back() == 0) p.pop_back();
}

}  // namespace poly

struct RsDecodeResult {
  Bytes data;     // message part (codeword minus parity)
  int corrected;  // symbols changed or filled
};

// Systematic RS codec over GF(256) with configurable parity count.
// Shortened lengths are supported by passing fewer than 255-t data bytes.
class RsCodec {
 public:
  explicit RsCodec(int nparity) : t_(nparity) {
    gen_.assign(1, 1);
    for (int i = 0; i < t_; ++i)
      gen_ = poly::mul(gen_, {gf::pow_alpha(i), 1});  // (alpha^i + x)
  }

  int parity_count() const { return t_; }
  const std::vector<uint8_t>& generator() const { return gen_; }

  Bytes encode_parity(std::span<const uint8_t> msg) const {
    require(int(msg.size()) + t_ <= 255, Errc::length_error, "rs: message too long");
    // Remainder of msg(x) * x^t modulo the generator, via LFSR division.
    Bytes rem(t_, 0);
    for (uint8_t m : msg) {
      uint8_t feedback = uint8_t(m ^ rem[t_ - 1]);
      for (int i = t_ - 1; i > 0; --i)
        rem[i] = uint8_t(rem[i - 1] ^ gf::mul(feedback, gen_[i]));
      rem[0] = gf::mul(feedback, gen_[0]);
    }
    // rem is ascending-degree; parity is transmitted high degree first.
    Bytes parity(t_);
    for (int i = 0; i < t_; ++i) parity[i] = rem[t_ - 1 - i];
    return parity;
  }

  Bytes encode(std::span<const uint8_t> msg) const {
    Bytes cw(msg.begin(), msg.end());
    Bytes parity = encode_parity(msg);
    cw.insert(cw.end(), parity.begin(), parity.end());
    return cw;
  }

  // Errors-and-erasures decoding; succeeds whenever 2e + f <= t.
  RsDecodeResult decode(std::span<const uint8_t> cw, const std::vector<int>& erasures) const {
    const int n = int(cw.size());
    require(n > t_ && n <= 255, Errc::length_error, "rs: bad codeword length");
    std::vector<char> is_erasure(n, 0);
    for (int e : erasures) {
      require(e >= 0 && e < n, Errc::length_error, "rs: erasure position out of range");
      require(!is_erasure[e], Errc::length_error, "rs: duplicate erasure position");
      is_erasure[e] = 1;
    }
    const int f = int(erasures.size());
    require(f <= t_, Errc::unrecoverable_codeword, "rs: more erasures than parity symbols");

    std::vector<uint8_t> synd = syndromes(cw);
    bool clean = true;
    for (uint8_t s : synd)
      if (s) clean = false;
    if (clean && f == 0) return {Bytes(cw.begin(), cw.end() - t_), 0};

    // Erasure locator Gamma(x) = prod (1 + X_e x).
    std::vector<uint8_t> gamma{1};
    for (int e : erasures) gamma = poly::mul(gamma, {1, locator(n, e)});

    // Modified syndromes T = S*Gamma mod x^t; the error locator satisfies a
    // plain LFSR recurrence over T[f..t-1], so standard Berlekamp-Massey
    // applies to that window.
    std::vector<uint8_t> mod_synd(t_, 0);
    for (int i = 0; i < t_; ++i)
      for (int j = 0; j <= i && j < int(gamma.size()); ++j)
        mod_synd[i] ^= gf::mul(synd[i - j], gamma[j]);
    std::vector<uint8_t> window(mod_synd.begin() + f, mod_synd.end());
    std::vector<uint8_t> lambda_err = berlekamp_massey(window);
    require(2 * (int(lambda_err.size()) - 1) <= int(window.size()),
            Errc::unrecoverable_codeword, "rs: too many errors");

    std::vector<uint8_t> psi = poly::mul(lambda_err, gamma);
    poly::trim(psi);
    const int nu = int(psi.size()) - 1;

    // Chien search over valid positions.
    std::vector<int> pos;
    std::vector<uint8_t> roots;
    for (int j = 0; j < n; ++j) {
      uint8_t xinv = gf::inv(locator(n, j));
      if (poly::eval(psi, xinv) == 0) {
        pos.push_back(j);
        roots.push_back(xinv);
      }
    }
    require(int(pos.size()) == nu, Errc::unrecoverable_codeword, "rs: locator roots missing");

    // Omega = S*Psi mod x^t; Forney with first generator root alpha^0.
    std::vector<uint8_t> omega(t_, 0);
    for (int i = 0; i < t_; ++i)
      for (int j = 0; j <= i && j < int(psi.size()); ++j)
        omega[i] ^= gf::mul(synd[i - j], psi[j]);
    std::vector<uint8_t> psi_deriv;  // formal derivative keeps odd terms
    for (size_t i = 1; i < psi.size(); i += 2) {
      psi_deriv.push_back(psi[i]);
      psi_deriv.push_back(0);
    }
    if (psi_deriv.empty()) psi_deriv.push_back(0);

    Bytes fixed(cw.begin(), cw.end());
    int corrected = 0;
    for (size_t r = 0; r < pos.size(); ++r) {
      uint8_t denom = poly::eval(psi_deriv, roots[r]);
      require(denom != 0, Errc::unrecoverable_codeword, "rs: Forney denominator zero");
      uint8_t mag = gf::mul(locator(n, pos[r]), gf::div(poly::eval(omega, roots[r]), denom));
      if (mag != 0 || is_erasure[pos[r]]) {
        fixed[pos[r]] ^= mag;
        ++corrected;
      }
    }

    // Reject any decode that does not land on a codeword.
    for (uint8_t s : syndromes(fixed))
      require(s == 0, Errc::unrecoverable_codeword, "rs: syndromes nonzero after correction");
    return {Bytes(fixed.begin(), fixed.end() - t_), corrected};
  }

 private:
  static uint8_t locator(int n, int j) { return gf::pow_alpha(n - 1 - j); }

  std::vector<uint8_t> syndromes(std::span<const uint8_t> cw) const {
    std::vector<uint8_t> synd(t_);
    for (int i = 0; i < t_; ++i) {
      uint8_t a = gf::pow_alpha(i), s = 0;
      for (uint8_t c : cw) s = uint8_t(gf::mul(s, a) ^ c);
      synd[i] = s;
    }
    return synd;
  }

  static std::vector<uint8_t> berlekamp_massey(const std::vector<uint8_t>& seq) {
    std::vector<uint8_t> lambda{1}, prev{1};
    int L = 0, m = 1;
    uint8_t b = 1;
    for (int step = 0; step < int(seq.size()); ++step) {
      uint8_t d = seq[step];
      for (int i = 1; i <= L && i < int(lambda.size()); ++i)
        d ^= gf::mul(lambda[i], seq[step - i]);
      if (d == 0) {
        ++m;
        continue;
      }
      if (2 * L <= step) {
        std::vector<uint8_t> keep = lambda;
        add_shifted(lambda, prev, gf::div(d, b), m);
        L = step + 1 - L;
        prev = std::move(keep);
        b = d;
        m = 1;
      } else {
        add_shifted(lambda, prev, gf::div(d, b), m);
        ++m;
      }
    }
    poly::trim(lambda);
    return lambda;
  }

  // lambda += coef * x^shift * src
  static void add_shifted(std::vector<uint8_t>& lambda, const std::vector<uint8_t>& src,
                          uint8_t coef, int shift) {
    if (lambda.size() < src.size() + shift) lambda.resize(src.size() + shift, 0);
    for (size_t i = 0; i < src.size(); ++i) lambda[i + shift] ^= gf::mul(coef, src[i]);
  }

  int t_;
  std::vector<uint8_t> gen_;
};

inline const RsCodec& inner_codec() {
  static const RsCodec codec(kInnerParity);
  return codec;
}

inline const RsCodec& outer_codec() {
  static const RsCodec codec(kOuterParity);
  return codec;
}

inline Bytes rs_encode(std::span<const uint8_t> msg) {
  require(msg.size() == kInnerData, Errc::length_error, "rs_encode: message must be 223 octets");
  return inner_codec().encode(msg);
}

inline RsDecodeResult rs_decode(std::span<const uint8_t> cw, const std::vector<int>& erasures) {
  require(cw.size() == kInnerCodeword, Errc::length_error, "rs_decode: codeword must be 255 octets");
  return inner_codec().decode(cw, erasures);
}

// Outer code: per byte column, the k data bytes form a shortened RS(k+3, k)
// message; parity bytes at offset j depend only on data bytes at offset j.
inline std::vector<Bytes> outer_encode(const std::vector<Bytes>& payloads) {
  const int k = int(payloads.size());
  require(k >= 1 && k <= kOuterMaxData, Errc::length_error, "outer_encode: k must be 1..17");
  const size_t len = payloads[0].size();
  for (const auto& p : payloads)
    require(p.size() == len, Errc::length_error, "outer_encode: unequal payload lengths");

  std::vector<Bytes> parity(kOuterParity, Bytes(len, 0));
  Bytes column(k);
  for (size_t off = 0; off < len; ++off) {
    for (int i = 0; i < k; ++i) column[i] = payloads[i][off];
    Bytes p = outer_codec().encode_parity(column);
    for (int i = 0; i < kOuterParity; ++i) parity[i][off] = p[i];
  }
  return parity;
}

// Recovers all k+3 members from any >= k of them (byte-column erasure decode).
inline std::vector<Bytes> outer_recover(const std::map<int, Bytes>& present, int k) {
  const int total = k + kOuterParity;
  require(k >= 1 && k <= kOuterMaxData, Errc::length_error, "outer_recover: k must be 1..17");
  require(int(present.size()) >= k, Errc::unrecoverable_group,
          "outer_recover: fewer than k members present");
  size_t len = 0;
  bool first = true;
  for (const auto& [idx, payload] : present) {
    require(idx >= 0 && idx < total, Errc::length_error, "outer_recover: index out of range");
    if (first) {
      len = payload.size();
      first = false;
    }
    require(payload.size() == len, Errc::length_error, "outer_recover: unequal payload lengths");
  }

  std::vector<int> missing;
  for (int i = 0; i < total; ++i)
    if (!present.count(i)) missing.push_back(i);

  std::vector<Bytes> out(total, Bytes(len, 0));
  for (const auto& [idx, payload] : present) out[idx] = payload;
  if (missing.empty()) return out;

  Bytes column(total);
  for (size_t off = 0; off < len; ++off) {
    for (int i = 0; i < total; ++i) column[i] = present.count(i) ? out[i][off] : 0;
    auto res = outer_codec().decode(column, missing);
    Bytes parity;
    for (int m : missing) {
      if (m < k) {
        out[m][off] = res.data[m];
      } else {
        if (parity.empty()) parity = outer_codec().encode_parity(res.data);
        out[m][off] = parity[m - k];
      }
    }
  }
  return out;
}

}  // namespace ule::ecc
