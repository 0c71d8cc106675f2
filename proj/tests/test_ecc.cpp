#include <catch2/catch_amalgamated.hpp>

#include <random>
#include <set>

#include "ule/ecc.hpp"

using namespace ule;
using ecc::RsCodec;

namespace {

// Shift-and-reduce multiply, independent of the log/alog tables.
uint8_t gf_mul_shift(uint8_t a, uint8_t b) {
  uint16_t acc = 0, aa = a;
  for (int i = 0; i < 8; ++i) {
    if (b & (1 << i)) acc ^= uint16_t(aa << i);
  }
  // reduce modulo x^8 + x^4 + x^3 + x^2 + 1 (0x11D)
  for (int i = 15; i >= 8; --i)
    if (acc & (1 << i)) acc ^= uint16_t(0x11D << (i - 8));
  return uint8_t(acc);
}

// Naive remainder of msg(x) * x^t modulo gen(x); polynomials descending by
// degree with msg[0] the highest coefficient.
Bytes poly_mod_oracle(const Bytes& msg, const std::vector<uint8_t>& gen_ascending) {
  const int t = int(gen_ascending.size()) - 1;
  Bytes work(msg);
  work.insert(work.end(), size_t(t), 0);
  for (size_t i = 0; i + t < work.size(); ++i) {
    uint8_t lead = work[i];
    if (lead == 0) continue;
    // gen is monic; subtract lead * gen aligned at i
    for (int j = 0; j <= t; ++j)
      work[i + j] ^= gf_mul_shift(lead, gen_ascending[t - j]);
  }
  return Bytes(work.end() - t, work.end());
}

std::mt19937& rng() {
  static std::mt19937 gen(20260810);
  return gen;
}

Bytes random_message(size_t len) {
  Bytes m(len);
  for (auto& b : m) b = uint8_t(rng()());
  return m;
}

std::vector<int> random_positions(int count, int n) {
  std::set<int> s;
  while (int(s.size()) < count) s.insert(int(rng()() % n));
  return {s.begin(), s.end()};
}

}  // namespace

TEST_CASE("gf_mul examples", "[ecc]") {
  CHECK(ecc::gf_mul(0x00, 0x57) == 0x00);
  CHECK(ecc::gf_mul(0x01, 0x57) == 0x57);
  CHECK(ecc::gf_mul(0x02, 0x80) == 0x1D);
  CHECK(gf_mul_shift(0x02, 0x80) == 0x1D);
}

TEST_CASE("gf field axioms", "[ecc]") {
  for (int a = 0; a < 256; ++a)
    for (int b = 0; b < 256; ++b) {
      CHECK(ecc::gf_mul(uint8_t(a), uint8_t(b)) == ecc::gf_mul(uint8_t(b), uint8_t(a)));
      CHECK(ecc::gf_mul(uint8_t(a), uint8_t(b)) == gf_mul_shift(uint8_t(a), uint8_t(b)));
    }
  for (int a = 0; a < 256; ++a)
    for (int b = 0; b < 256; b += 7)
      for (uint8_t c : {0x02, 0x1D, 0xB7}) {
        uint8_t left = ecc::gf_mul(ecc::gf_mul(uint8_t(a), uint8_t(b)), c);
        uint8_t right = ecc::gf_mul(uint8_t(a), ecc::gf_mul(uint8_t(b), c));
        CHECK(left == right);
      }
  for (int a = 1; a < 256; ++a) CHECK(ecc::gf_mul(uint8_t(a), ecc::gf_inv(uint8_t(a))) == 1);
}

TEST_CASE("rs_encode basics", "[ecc]") {
  Bytes zeros(ecc::kInnerData, 0);
  Bytes cw = ecc::rs_encode(zeros);
  CHECK(cw == Bytes(ecc::kInnerCodeword, 0));

  // Parity of e0 equals the coefficients of x^254 mod g(x).
  Bytes e0(ecc::kInnerData, 0);
  e0[0] = 1;
  Bytes expect = poly_mod_oracle(e0, ecc::inner_codec().generator());
  Bytes got = ecc::rs_encode(e0);
  CHECK(Bytes(got.begin() + ecc::kInnerData, got.end()) == expect);

  for (int trial = 0; trial < 20; ++trial) {
    Bytes msg = random_message(ecc::kInnerData);
    Bytes parity_oracle = poly_mod_oracle(msg, ecc::inner_codec().generator());
    Bytes full = ecc::rs_encode(msg);
    CHECK(Bytes(full.begin() + ecc::kInnerData, full.end()) == parity_oracle);
    auto dec = ecc::rs_decode(full, {});
    CHECK(dec.data == msg);
    CHECK(dec.corrected == 0);
  }

  CHECK_THROWS_AS(ecc::rs_encode(Bytes(100, 0)), Error);
}

TEST_CASE("rs_decode errors and erasures", "[ecc]") {
  // 16 random byte errors decode exactly.
  for (int trial = 0; trial < 300; ++trial) {
    Bytes msg = random_message(ecc::kInnerData);
    Bytes cw = ecc::rs_encode(msg);
    auto pos = random_positions(16, ecc::kInnerCodeword);
    for (int p : pos) cw[p] ^= uint8_t(1 + rng()() % 255);
    auto dec = ecc::rs_decode(cw, {});
    CHECK(dec.data == msg);
    CHECK(dec.corrected == 16);
  }

  // 32 erasures, zero errors.
  for (int trial = 0; trial < 100; ++trial) {
    Bytes msg = random_message(ecc::kInnerData);
    Bytes cw = ecc::rs_encode(msg);
    auto pos = random_positions(32, ecc::kInnerCodeword);
    for (int p : pos) cw[p] = uint8_t(rng()());
    auto dec = ecc::rs_decode(cw, pos);
    CHECK(dec.data == msg);
  }

  // Mixed budgets 2e + f <= 32.
  for (auto [e, f] : std::vector<std::pair<int, int>>{{1, 30}, {8, 16}, {12, 8}, {15, 2}}) {
    for (int trial = 0; trial < 60; ++trial) {
      Bytes msg = random_message(ecc::kInnerData);
      Bytes cw = ecc::rs_encode(msg);
      auto all = random_positions(e + f, ecc::kInnerCodeword);
      std::vector<int> erasures(all.begin(), all.begin() + f);
      for (int i = 0; i < f; ++i) cw[all[i]] = uint8_t(rng()());
      for (int i = f; i < e + f; ++i) cw[all[i]] ^= uint8_t(1 + rng()() % 255);
      auto dec = ecc::rs_decode(cw, erasures);
      CHECK(dec.data == msg);
    }
  }

  // Beyond the budget (2e + f = 33 or more) failure must be reported.
  int reported = 0;
  const int trials = 400;
  for (int trial = 0; trial < trials; ++trial) {
    Bytes msg = random_message(ecc::kInnerData);
    Bytes cw = ecc::rs_encode(msg);
    auto pos = random_positions(17, ecc::kInnerCodeword);
    for (int p : pos) cw[p] ^= uint8_t(1 + rng()() % 255);
    try {
      (void)ecc::rs_decode(cw, {});  // a return here is a silent misdecode
    } catch (const Error&) {
      ++reported;
    }
  }
  CHECK(reported >= trials * 99 / 100);
}

TEST_CASE("outer code encode", "[ecc]") {
  std::vector<Bytes> zeros(5, Bytes(64, 0));
  auto parity = ecc::outer_encode(zeros);
  REQUIRE(parity.size() == 3);
  for (const auto& p : parity) CHECK(p == Bytes(64, 0));

  // k = 1: parity sequences are fixed scalar multiples of the data payload.
  Bytes gen = poly_mod_oracle(Bytes{1}, ecc::outer_codec().generator());
  REQUIRE(gen.size() == 3);
  Bytes payload = random_message(48);
  auto p1 = ecc::outer_encode({payload});
  for (int i = 0; i < 3; ++i)
    for (size_t j = 0; j < payload.size(); ++j)
      CHECK(p1[i][j] == gf_mul_shift(gen[i], payload[j]));

  CHECK_THROWS_AS(ecc::outer_encode({Bytes(3, 0), Bytes(4, 0)}), Error);
  CHECK_THROWS_AS(ecc::outer_encode(std::vector<Bytes>(18, Bytes(4, 0))), Error);
}

TEST_CASE("outer code recover", "[ecc]") {
  for (int k : {1, 5, 17}) {
    std::vector<Bytes> data;
    for (int i = 0; i < k; ++i) data.push_back(random_message(32));
    auto parity = ecc::outer_encode(data);
    std::vector<Bytes> members = data;
    members.insert(members.end(), parity.begin(), parity.end());
    const int total = k + 3;

    // nothing missing -> identity
    std::map<int, Bytes> all;
    for (int i = 0; i < total; ++i) all[i] = members[i];
    CHECK(ecc::outer_recover(all, k) == members);

    // exhaustively all erasure triples
    for (int a = 0; a < total; ++a)
      for (int b = a + 1; b < total; ++b)
        for (int c = b + 1; c < total; ++c) {
          std::map<int, Bytes> present;
          for (int i = 0; i < total; ++i)
            if (i != a && i != b && i != c) present[i] = members[i];
          auto out = ecc::outer_recover(present, k);
          CHECK(out == members);
        }
  }

  // 4 missing of 20 is beyond the code distance.
  std::vector<Bytes> data;
  for (int i = 0; i < 17; ++i) data.push_back(random_message(16));
  auto parity = ecc::outer_encode(data);
  std::map<int, Bytes> present;
  for (int i = 4; i < 17; ++i) present[i] = data[i];
  for (int i = 0; i < 3; ++i) present[17 + i] = parity[i];
  CHECK_THROWS_AS(ecc::outer_recover(present, 17), Error);
}

TEST_CASE("outer code column independence", "[ecc]") {
  std::vector<Bytes> data;
  for (int i = 0; i < 5; ++i) data.push_back(random_message(40));
  auto parity = ecc::outer_encode(data);

  // corrupt one byte offset of one member; recovery at other offsets is
  // unaffected because each column is an independent codeword
  std::vector<Bytes> tweaked = data;
  tweaked[2][7] ^= 0x5A;
  auto parity2 = ecc::outer_encode(tweaked);
  for (int i = 0; i < 3; ++i)
    for (size_t j = 0; j < 40; ++j) {
      if (j == 7)
        CHECK(parity[i][j] != parity2[i][j]);
      else
        CHECK(parity[i][j] == parity2[i][j]);
    }
}
