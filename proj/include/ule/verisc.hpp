#pragma once

// VeRisc: the four-instruction bootstrap machine. One 16-bit accumulator R,
// 65,536 words of 16-bit memory, and a borrow flag. Instructions are two
// consecutive words, [opcode, address], with opcode 0=LD, 1=ST, 2=SBB, 3=AND.
// Control, I/O, and halt are memory-mapped:
//
//   word 0   read: PC of the next instruction; write: jump
//   word 1   borrow flag (read and write)
//   word 2   read: next input octet at the 32-bit cursor, cursor += 1;
//            0xFFFF past the end of input
//   word 3   write: append low octet to the output stream
//   word 4   write: halt with exit code
//   word 5,6 input cursor, high and low word (plain storage)
//   word 7,8 read: input length, low and high word
//   word 9..15  reserved: read as 0, writes ignored
//
// Execution starts at word 16. Self-modifying stores into code are ordinary
// memory writes and are the only indirection mechanism.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ule/bitcore.hpp"
#include "ule/error.hpp"

namespace ule::verisc {

inline constexpr uint16_t kEntry = 16;
inline constexpr size_t kMemWords = 65536;

enum Opcode : uint16_t { kLd = 0, kSt = 1, kSbb = 2, kAnd = 3 };

using WordImage = std::vector<uint16_t>;

struct VeRiscState {
  uint16_t r = 0;
  uint16_t pc = kEntry;
  uint8_t borrow = 0;
  std::vector<uint16_t> mem = std::vector<uint16_t>(kMemWords, 0);
  bool halted = false;
  uint16_t exit_code = 0;
  uint64_t step_count = 0;
  Bytes input;
  Bytes output;
};

[[noreturn]] inline void vr_trap(const VeRiscState& s, const std::string& cause) {
  fail(Errc::trap, "verisc trap: " + cause + " at pc=" + std::to_string(s.pc) +
                       " step=" + std::to_string(s.step_count));
}

namespace detail {

inline uint16_t mapped_read(VeRiscState& s, uint16_t addr, uint16_t pc_next) {
  switch (addr) {
    case 0:
      return pc_next;
    case 1:
      return s.borrow;
    case 2: {
      uint32_t cur = (uint32_t(s.mem[5]) << 16) | s.mem[6];
      uint16_t v = cur < s.input.size() ? s.input[cur] : 0xFFFF;
      ++cur;
      s.mem[5] = uint16_t(cur >> 16);
      s.mem[6] = uint16_t(cur);
      return v;
    }
    case 5:
    case 6:
      return s.mem[addr];
    case 7:
      return uint16_t(s.input.size());
    case 8:
      return uint16_t(s.input.size() >> 16);
    default:
      return 0;  // 3, 4, 9..15
  }
}

// returns true when the write was a jump (word 0)
inline bool mapped_write(VeRiscState& s, uint16_t addr, uint16_t v) {
  switch (addr) {
    case 0:
      s.pc = v;
      return true;
    case 1:
      s.borrow = v & 1;
      return false;
    case 3:
      s.output.push_back(uint8_t(v));
      return false;
    case 4:
      s.halted = true;
      s.exit_code = v;
      return false;
    case 5:
    case 6:
      s.mem[addr] = v;
      return false;
    default:
      return false;  // 2, 7, 8, 9..15 ignored
  }
}

}  // namespace detail

inline void vr_step(VeRiscState& s) {
  require(!s.halted, Errc::usage_error, "vr_step: machine is halted");
  const uint16_t op = s.mem[s.pc];
  const uint16_t addr = s.mem[uint16_t(s.pc + 1)];
  const uint16_t pc_next = uint16_t(s.pc + 2);
  if (op > 3) vr_trap(s, "opcode word has nonzero upper bits");

  auto read = [&](uint16_t a) -> uint16_t {
    return a < 16 ? detail::mapped_read(s, a, pc_next) : s.mem[a];
  };

  bool jumped = false;
  switch (op) {
    case kLd:
      s.r = read(addr);
      break;
    case kSt:
      if (addr < 16)
        jumped = detail::mapped_write(s, addr, s.r);
      else
        s.mem[addr] = s.r;
      break;
    case kSbb: {
      uint16_t v = read(addr);
      uint32_t sub = uint32_t(v) + s.borrow;
      uint8_t new_borrow = uint32_t(s.r) < sub ? 1 : 0;
      s.r = uint16_t(s.r - sub);
      s.borrow = new_borrow;
      break;
    }
    case kAnd:
      s.r &= read(addr);
      break;
  }
  if (!jumped) s.pc = pc_next;
  ++s.step_count;
}

// ---------------------------------------------------------------------------
// Assembler: LD/ST/SBB/AND with numeric or label addresses, labels,
// .org/.word directives, ';' comments. Addresses are word addresses.

inline WordImage vr_assemble(const std::string& source) {
  auto trim = [](const std::string& str) {
    size_t a = str.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return std::string();
    size_t b = str.find_last_not_of(" \t\r\n");
    return str.substr(a, b - a + 1);
  };
  auto parse_number = [](const std::string& tok, long& value) {
    if (tok.empty()) return false;
    size_t pos = 0;
    int base = 10;
    if (tok.size() > 2 && tok[0] == '0' && (tok[1] == 'x' || tok[1] == 'X')) {
      base = 16;
      pos = 2;
    }
    long v = 0;
    for (; pos < tok.size(); ++pos) {
      char c = tok[pos];
      int digit;
      if (c >= '0' && c <= '9')
        digit = c - '0';
      else if (base == 16 && c >= 'a' && c <= 'f')
        digit = c - 'a' + 10;
      else if (base == 16 && c >= 'A' && c <= 'F')
        digit = c - 'A' + 10;
      else
        return false;
      v = v * base + digit;
    }
    value = v;
    return true;
  };

  struct Ref {
    int line_no;
    size_t address;   // word address of the value to patch
    std::string expr;
  };
  std::map<std::string, uint16_t> symbols;
  std::vector<std::pair<size_t, uint16_t>> words;  // (word address, value)
  std::vector<Ref> refs;

  size_t lc = kEntry;
  size_t max_addr = 0;
  auto emit = [&](size_t addr, uint16_t v) {
    require(addr < kMemWords, Errc::assembly_error, "verisc: address beyond memory");
    words.emplace_back(addr, v);
    max_addr = std::max(max_addr, addr);
  };

  std::istringstream in(source);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto sc = line.find(';'); sc != std::string::npos) line = line.substr(0, sc);
    line = trim(line);
    while (!line.empty()) {
      size_t colon = line.find(':');
      size_t space = line.find_first_of(" \t");
      if (colon != std::string::npos && (space == std::string::npos || colon < space)) {
        std::string label = trim(line.substr(0, colon));
        require(!label.empty() && !symbols.count(label), Errc::assembly_error,
                "line " + std::to_string(line_no) + ": bad or duplicate label");
        symbols[label] = uint16_t(lc);
        line = trim(line.substr(colon + 1));
        continue;
      }
      break;
    }
    if (line.empty()) continue;

    size_t space = line.find_first_of(" \t");
    std::string mnem = line.substr(0, space);
    for (auto& c : mnem) c = char(std::toupper(c));
    std::string rest = space == std::string::npos ? "" : trim(line.substr(space));

    if (mnem == ".ORG") {
      long v;
      require(parse_number(rest, v) && v >= 0 && size_t(v) < kMemWords, Errc::assembly_error,
              "line " + std::to_string(line_no) + ": bad .org");
      lc = size_t(v);
      continue;
    }
    if (mnem == ".WORD") {
      std::istringstream ops(rest);
      std::string tok;
      while (std::getline(ops, tok, ',')) {
        tok = trim(tok);
        require(!tok.empty(), Errc::assembly_error,
                "line " + std::to_string(line_no) + ": empty .word operand");
        long v;
        if (parse_number(tok, v)) {
          require(v >= 0 && v <= 0xFFFF, Errc::assembly_error,
                  "line " + std::to_string(line_no) + ": word out of range");
          emit(lc, uint16_t(v));
        } else {
          refs.push_back({line_no, lc, tok});
          emit(lc, 0);
        }
        ++lc;
      }
      continue;
    }

    uint16_t opcode;
    if (mnem == "LD")
      opcode = kLd;
    else if (mnem == "ST")
      opcode = kSt;
    else if (mnem == "SBB")
      opcode = kSbb;
    else if (mnem == "AND")
      opcode = kAnd;
    else
      fail(Errc::assembly_error, "line " + std::to_string(line_no) + ": unknown mnemonic: " + mnem);

    require(!rest.empty(), Errc::assembly_error,
            "line " + std::to_string(line_no) + ": missing address operand");
    emit(lc, opcode);
    long v;
    if (parse_number(rest, v)) {
      require(v >= 0 && size_t(v) < kMemWords, Errc::assembly_error,
              "line " + std::to_string(line_no) + ": address out of range");
      emit(lc + 1, uint16_t(v));
    } else {
      refs.push_back({line_no, lc + 1, rest});
      emit(lc + 1, 0);
    }
    lc += 2;
  }

  WordImage image(max_addr + 1, 0);
  for (auto [addr, v] : words) image[addr] = v;
  for (const auto& ref : refs) {
    // label with an optional +N/-N offset
    std::string name = ref.expr;
    long offset = 0;
    size_t split = std::string::npos;
    for (size_t i = 1; i < name.size(); ++i)
      if (name[i] == '+' || name[i] == '-') {
        split = i;
        break;
      }
    if (split != std::string::npos) {
      require(parse_number(trim(name.substr(split + 1)), offset), Errc::assembly_error,
              "line " + std::to_string(ref.line_no) + ": bad offset: " + ref.expr);
      if (name[split] == '-') offset = -offset;
      name = trim(name.substr(0, split));
    }
    auto it = symbols.find(name);
    require(it != symbols.end(), Errc::assembly_error,
            "line " + std::to_string(ref.line_no) + ": undefined label: " + name);
    long v = long(it->second) + offset;
    require(v >= 0 && v < long(kMemWords), Errc::assembly_error,
            "line " + std::to_string(ref.line_no) + ": resolved address out of range");
    image[ref.address] = uint16_t(v);
  }
  return image;
}

// Little-endian word file.
inline Bytes image_to_bytes(const WordImage& image) {
  Bytes out(image.size() * 2);
  for (size_t i = 0; i < image.size(); ++i) {
    out[2 * i] = uint8_t(image[i]);
    out[2 * i + 1] = uint8_t(image[i] >> 8);
  }
  return out;
}

inline WordImage image_from_bytes(std::span<const uint8_t> raw) {
  require(raw.size() % 2 == 0, Errc::format_error, "verisc image: odd byte count");
  WordImage image(raw.size() / 2);
  for (size_t i = 0; i < image.size(); ++i)
    image[i] = uint16_t(raw[2 * i] | (raw[2 * i + 1] << 8));
  return image;
}

struct VrRunResult {
  Bytes output;
  uint16_t exit_code = 0;
  uint64_t step_count = 0;
};

inline VeRiscState vr_load(const WordImage& image, Bytes input) {
  require(image.size() <= kMemWords, Errc::length_error, "verisc: image does not fit memory");
  VeRiscState s;
  std::copy(image.begin(), image.end(), s.mem.begin());
  s.input = std::move(input);
  return s;
}

inline VrRunResult vr_run(const WordImage& image, Bytes input, uint64_t max_steps) {
  VeRiscState s = vr_load(image, std::move(input));
  while (!s.halted) {
    require(s.step_count < max_steps, Errc::timeout,
            "verisc: exceeded " + std::to_string(max_steps) + " steps");
    vr_step(s);
  }
  return {std::move(s.output), s.exit_code, s.step_count};
}

}  // namespace ule::verisc
