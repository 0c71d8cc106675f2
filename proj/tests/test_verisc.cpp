#include <catch2/catch_amalgamated.hpp>

#include "ule/verisc.hpp"

using namespace ule;
using namespace ule::verisc;

namespace {

// Echo the input through the mapped cells; exercises the jump-table branch
// idiom used by the larger programs.
const char* kEchoSource = R"(
.org 16
loop:
    LD 2            ; next input octet, 0xFFFF at end
    ST val
    LD zero
    ST 1            ; clear borrow
    LD val
    SBB kffff       ; borrow = 0 iff val == 0xFFFF
    LD 1
    ST idx          ; idx: 0 = done, 1 = continue
    LD zero
    ST 1
    LD zero
    SBB idx
    ST negidx       ; negidx = -idx
    LD zero
    ST 1
    LD jtbl_ptr
    SBB negidx      ; R = jtbl + idx
    ST ldsel+1
ldsel:
    LD 0            ; patched: loads jtbl[idx]
    ST 0            ; jump
cont:
    LD val
    ST 3            ; emit octet
    LD kloop
    ST 0
done:
    LD zero
    ST 4            ; halt 0

val:      .word 0
idx:      .word 0
negidx:   .word 0
zero:     .word 0
kffff:    .word 0xFFFF
jtbl_ptr: .word jtbl
jtbl:     .word done, cont
kloop:    .word loop
)";

}  // namespace

TEST_CASE("step semantics examples", "[verisc]") {
  // SBB without borrow
  VeRiscState s;
  s.mem[100] = 3;
  s.r = 5;
  s.mem[16] = kSbb;
  s.mem[17] = 100;
  vr_step(s);
  CHECK(s.r == 2);
  CHECK(s.borrow == 0);

  // SBB with wraparound sets borrow
  VeRiscState s2;
  s2.mem[100] = 3;
  s2.r = 2;
  s2.mem[16] = kSbb;
  s2.mem[17] = 100;
  vr_step(s2);
  CHECK(s2.r == 0xFFFF);
  CHECK(s2.borrow == 1);

  // LD then ST 0 jumps
  VeRiscState s3;
  s3.mem[50] = 0x0200;
  s3.mem[16] = kLd;
  s3.mem[17] = 50;
  s3.mem[18] = kSt;
  s3.mem[19] = 0;
  vr_step(s3);
  vr_step(s3);
  CHECK(s3.pc == 0x0200);

  // nonzero upper bits in the opcode word trap
  VeRiscState s4;
  s4.mem[16] = 9;
  CHECK_THROWS_MATCHES(vr_step(s4), Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::trap;
                       }));
}

TEST_CASE("assembler basics", "[verisc]") {
  auto img = vr_assemble("LD 2\n");
  REQUIRE(img.size() == 18);
  CHECK(img[16] == 0);
  CHECK(img[17] == 2);

  auto words = vr_assemble(".word 0xBEEF\n");
  CHECK(words[16] == 0xBEEF);

  auto fwd = vr_assemble(R"(
    LD target
    ST 0
target: .word 7
)");
  CHECK(fwd[17] == 20);  // label after two instructions

  CHECK_THROWS_AS(vr_assemble("LD nowhere\n"), Error);
  CHECK_THROWS_AS(vr_assemble("FOO 3\n"), Error);
  CHECK_THROWS_AS(vr_assemble(".org 70000\n"), Error);

  // image round trip through the little-endian word file format
  auto bytes = image_to_bytes(fwd);
  CHECK(image_from_bytes(bytes) == fwd);
}

TEST_CASE("echo program via mapped I/O", "[verisc]") {
  auto img = vr_assemble(kEchoSource);
  Bytes input{'h', 'e', 'l', 'l', 'o', 0, 255, 7};
  auto res = vr_run(img, input, 100000);
  CHECK(res.output == input);
  CHECK(res.exit_code == 0);

  auto res2 = vr_run(img, input, 100000);
  CHECK(res2.step_count == res.step_count);  // determinism
}

TEST_CASE("immediate halt runs exactly two instructions", "[verisc]") {
  auto img = vr_assemble(R"(
    LD k0
    ST 4
k0: .word 0
)");
  auto res = vr_run(img, {}, 100);
  CHECK(res.output.empty());
  CHECK(res.exit_code == 0);
  CHECK(res.step_count == 2);
}

TEST_CASE("addition via two SBB sequences", "[verisc]") {
  auto img = vr_assemble(R"(
    LD zero
    ST 1          ; clear borrow
    LD zero
    SBB b         ; R = -b
    ST negb
    LD zero
    ST 1
    LD a
    SBB negb      ; R = a + b
    ST 3
    LD zero
    ST 4
a:    .word 2
b:    .word 3
negb: .word 0
zero: .word 0
)");
  auto res = vr_run(img, {}, 100);
  REQUIRE(res.output.size() == 1);
  CHECK(res.output[0] == 5);
}

TEST_CASE("self-modifying operand rewrite", "[verisc]") {
  auto img = vr_assemble(R"(
    LD kval_addr
    ST tgt+1      ; rewrite the operand of the LD below
tgt:
    LD 0          ; now reads kval
    ST 3
    LD k0
    ST 4
kval:      .word 77
kval_addr: .word kval
k0:        .word 0
)");
  auto res = vr_run(img, {}, 100);
  REQUIRE(res.output.size() == 1);
  CHECK(res.output[0] == 77);
}

TEST_CASE("input cursor is writable for random access", "[verisc]") {
  auto img = vr_assemble(R"(
    LD k3
    ST 6          ; cursor low word
    LD k0
    ST 5          ; cursor high word
    LD 2          ; input[3]
    ST 3
    LD k0
    ST 4
k3: .word 3
k0: .word 0
)");
  Bytes input{'a', 'b', 'c', 'd', 'e'};
  auto res = vr_run(img, input, 100);
  REQUIRE(res.output.size() == 1);
  CHECK(res.output[0] == 'd');
}

TEST_CASE("input length is readable from words 7 and 8", "[verisc]") {
  auto img = vr_assemble(R"(
    LD 7
    ST 3          ; low octet of low word
    LD 8
    ST 3          ; low octet of high word
    LD k0
    ST 4
k0: .word 0
)");
  Bytes input(300, 1);
  auto res = vr_run(img, input, 100);
  REQUIRE(res.output.size() == 2);
  CHECK(res.output[0] == uint8_t(300 & 0xFF));
  CHECK(res.output[1] == 0);
}

TEST_CASE("timeout is reported", "[verisc]") {
  auto img = vr_assemble(R"(
loop:
    LD kloop
    ST 0
kloop: .word loop
)");
  CHECK_THROWS_MATCHES(vr_run(img, {}, 1000), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::timeout; }));
}
