#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ule/dynarisc.hpp"
#include "ule/guest_sources.hpp"

using namespace ule;
using namespace ule::dynarisc;

namespace {

DynaRiscProgram assemble(const std::string& src) { return dr_assemble(src); }

uint16_t word_at(const DynaRiscProgram& p, size_t off) {
  return uint16_t(p.image[off] | (p.image[off + 1] << 8));
}

}  // namespace

TEST_CASE("assembler encodings", "[dynarisc]") {
  auto halt = assemble("HALT\n");
  REQUIRE(halt.image.size() == 2);
  CHECK(word_at(halt, 0) == (22u << 11));

  auto ldi = assemble("LDI R1,#0x1234\n");
  REQUIRE(ldi.image.size() == 4);
  CHECK(word_at(ldi, 0) == ((13u << 11) | (1u << 8)));
  CHECK(word_at(ldi, 2) == 0x1234);

  // forward reference resolves through the two-pass contract
  auto fwd = assemble(R"(
    JUMP target
    HALT
target:
    HALT
)");
  CHECK(word_at(fwd, 0) == (16u << 11));
  CHECK(word_at(fwd, 2) == 0x0106);  // 0x0100 + 4 (JUMP) + 2 (HALT)

  auto indirect = assemble("JUMP [D3]\n");
  REQUIRE(indirect.image.size() == 2);
  CHECK(word_at(indirect, 0) == ((16u << 11) | (3u << 5) | (1u << 2)));

  auto stm = assemble("STM R5, [D2]\n");
  CHECK(word_at(stm, 0) == ((15u << 11) | (2u << 8) | (5u << 5) | (1u << 3)));
  auto ldm = assemble("LDM R5, [D2]\n");
  CHECK(word_at(ldm, 0) == ((14u << 11) | (5u << 8) | (2u << 5) | (2u << 3)));
}

TEST_CASE("assembler errors", "[dynarisc]") {
  CHECK_THROWS_AS(assemble("FROB R0, R1\n"), Error);
  CHECK_THROWS_AS(assemble("JUMP nowhere\n"), Error);
  CHECK_THROWS_AS(assemble("dup: HALT\ndup: HALT\n"), Error);
  CHECK_THROWS_AS(assemble("LDI R0,#0x12345\n"), Error);
  CHECK_THROWS_AS(assemble(".byte 300\n"), Error);
  CHECK_THROWS_AS(assemble("SYS 7\n"), Error);
}

TEST_CASE("step semantics examples", "[dynarisc]") {
  auto prog = assemble(R"(
    LDI R0, #2
    LDI R1, #3
    SUB R2, R2
    ADC R0, R1
    HALT
)");
  auto s = dr_load(prog, {});
  while (!s.halted) dr_step(s);
  CHECK(s.r[0] == 5);
  CHECK(s.flag_c == 0);
  CHECK(s.flag_z == 0);

  auto ror = assemble(R"(
    LDI R0, #1
    LDI R1, #1
    ROR R0, R1
    HALT
)");
  auto s2 = dr_load(ror, {});
  while (!s2.halted) dr_step(s2);
  CHECK(s2.r[0] == 0x8000);
  CHECK(s2.flag_c == 1);

  auto sub = assemble("SUB R0, R0\nHALT\n");
  auto s3 = dr_load(sub, {});
  while (!s3.halted) dr_step(s3);
  CHECK(s3.r[0] == 0);
  CHECK(s3.flag_z == 1);
  CHECK(s3.flag_c == 0);
}

TEST_CASE("flag algebra: adc then sbb with the same carry-in restores a", "[dynarisc]") {
  std::mt19937 rng(5150);
  auto adc = assemble("ADC R0, R1\nHALT\n");
  auto sbb = assemble("SBB R0, R1\nHALT\n");
  for (int trial = 0; trial < 2000; ++trial) {
    uint16_t a = uint16_t(rng()), b = uint16_t(rng());
    uint8_t c = rng() & 1;
    auto s = dr_load(adc, {});
    s.r[0] = a;
    s.r[1] = b;
    s.flag_c = c;
    dr_step(s);
    uint16_t sum = s.r[0];
    auto s2 = dr_load(sbb, {});
    s2.r[0] = sum;
    s2.r[1] = b;
    s2.flag_c = c;
    dr_step(s2);
    CHECK(s2.r[0] == a);
  }
}

TEST_CASE("echo program", "[dynarisc]") {
  auto prog = dr_assemble(guest_sources::echo());
  std::mt19937 rng(31);
  Bytes input(3000);
  for (auto& b : input) b = uint8_t(rng());
  auto res = dr_run(prog, input, 1'000'000);
  CHECK(res.output == input);
  CHECK(res.exit_code == 0);

  // determinism
  auto res2 = dr_run(prog, input, 1'000'000);
  CHECK(res2.output == res.output);
  CHECK(res2.step_count == res.step_count);

  auto empty = dr_run(prog, {}, 1000);
  CHECK(empty.output.empty());
}

TEST_CASE("empty program halts with exit 0", "[dynarisc]") {
  auto res = dr_run(assemble("HALT\n"), {}, 10);
  CHECK(res.output.empty());
  CHECK(res.exit_code == 0);
  CHECK(res.step_count == 1);
}

TEST_CASE("timeout after exactly max_steps", "[dynarisc]") {
  auto prog = assemble("loop: JUMP loop\n");
  try {
    dr_run(prog, {}, 1000);
    FAIL("expected timeout");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::timeout);
  }
  // confirm the step budget is honored exactly
  auto s = dr_load(prog, {});
  for (int i = 0; i < 1000; ++i) dr_step(s);
  CHECK(s.step_count == 1000);
}

TEST_CASE("traps", "[dynarisc]") {
  // invalid opcode 23
  auto bad = assemble(".word 0xB800\n");
  CHECK_THROWS_MATCHES(dr_run(bad, {}, 10), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::trap; }));

  // memory access beyond 0x7FFF
  auto oob = assemble(R"(
    LDI R0, #0x9000
    MOVE D0, R0
    LDM R1, [D0]
    HALT
)");
  CHECK_THROWS_AS(dr_run(oob, {}, 10), Error);

  // running off the end of memory
  auto runaway = assemble("JUMP 0x7FF0\n");
  CHECK_THROWS_AS(dr_run(runaway, {}, 100), Error);
}
