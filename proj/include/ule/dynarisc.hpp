#pragma once

// DynaRisc: 23-instruction, 16-bit virtual processor. 8 data registers
// (R0-R7), 4 pointer registers (D0-D3), carry and zero flags, 32 KiB of
// byte-addressed memory, and a SYS host interface for random-access input,
// output, and input length.
//
// Instruction word: opcode(5) | rd(3) | rs(3) | class(2) | mode(1) | rsv(2),
// most significant bits first. LDI and absolute JUMP/Jcc carry one extra
// operand word. Words are little-endian in memory and in image files.

#include <array>
#include <cctype>
#include <cstdint>
#include <cstdio>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "ule/bitcore.hpp"
#include "ule/error.hpp"

namespace ule::dynarisc {

inline constexpr uint16_t kMemSize = 0x8000;
inline constexpr uint16_t kDefaultLoad = 0x0100;

enum Opcode : uint8_t {
  kAdc = 0,
  kSbb,
  kSub,
  kCmp,
  kMul,
  kAnd,
  kOr,
  kXor,
  kLsl,
  kLsr,
  kAsr,
  kRor,
  kMove,
  kLdi,
  kLdm,
  kStm,
  kJump,
  kJz,
  kJnz,
  kJc,
  kJnc,
  kSys,
  kHalt,
  kOpcodeCount
};

// operand classes for MOVE (and fixed values for LDM/STM)
enum RegClass : uint8_t { kClassRR = 0, kClassRD = 1, kClassDR = 2 };

inline uint16_t encode_word(uint8_t opcode, uint8_t rd, uint8_t rs, uint8_t cls, uint8_t mode) {
  return uint16_t((opcode << 11) | ((rd & 7) << 8) | ((rs & 7) << 5) | ((cls & 3) << 3) |
                  ((mode & 1) << 2));
}

struct DynaRiscProgram {
  Bytes image;                  // loaded at load_address
  uint16_t load_address = kDefaultLoad;
  uint16_t entry = kDefaultLoad;
  std::map<std::string, uint16_t> symbols;
};

// ---------------------------------------------------------------------------
// Assembler

namespace detail {

inline std::string strip_comment(const std::string& line) {
  bool in_quote = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (c == '"') in_quote = !in_quote;
    if (c == ';' && !in_quote) return line.substr(0, i);
  }
  return line;
}

inline std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

inline std::vector<std::string> split_operands(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  bool in_quote = false;
  for (char c : s) {
    if (c == '"') in_quote = !in_quote;
    if (c == ',' && !in_quote) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!trim(cur).empty()) out.push_back(trim(cur));
  return out;
}

inline bool parse_number(const std::string& tok, long& value) {
  if (tok.empty()) return false;
  if (tok.size() >= 3 && tok.front() == '\'' && tok.back() == '\'') {
    value = uint8_t(tok[1]);
    return tok.size() == 3;
  }
  size_t pos = 0;
  bool neg = tok[0] == '-';
  if (neg) pos = 1;
  int base = 10;
  if (tok.size() > pos + 1 && tok[pos] == '0' && (tok[pos + 1] == 'x' || tok[pos + 1] == 'X')) {
    base = 16;
    pos += 2;
  }
  if (pos >= tok.size()) return false;
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
  value = neg ? -v : v;
  return true;
}

// expression: term (('+'|'-') number)* where term is a number or a label
struct Expr {
  std::string label;  // empty for pure constants
  long offset = 0;
};

inline Expr parse_expr(const std::string& text, int line_no) {
  std::string s = trim(text);
  require(!s.empty(), Errc::assembly_error,
          "line " + std::to_string(line_no) + ": empty expression");
  Expr e;
  size_t split = std::string::npos;
  for (size_t i = 1; i < s.size(); ++i)
    if (s[i] == '+' || s[i] == '-') {
      split = i;
      break;
    }
  std::string head = trim(split == std::string::npos ? s : s.substr(0, split));
  long v;
  if (parse_number(head, v)) {
    e.offset = v;
  } else {
    e.label = head;
  }
  if (split != std::string::npos) {
    long off;
    require(parse_number(trim(s.substr(split)), off), Errc::assembly_error,
            "line " + std::to_string(line_no) + ": bad offset in expression: " + s);
    e.offset += off;
  }
  return e;
}

inline int reg_index(const std::string& tok, char kind) {
  if (tok.size() == 2 && (tok[0] == kind || tok[0] == std::tolower(kind)) && tok[1] >= '0' &&
      tok[1] <= '7')
    return tok[1] - '0';
  return -1;
}

inline std::string upper(std::string s) {
  for (auto& c : s) c = char(std::toupper(c));
  return s;
}

}  // namespace detail

inline DynaRiscProgram dr_assemble(const std::string& source) {
  using namespace detail;
  struct Item {  // one instruction or data directive occurrence
    int line_no;
    uint16_t address;
    std::string mnemonic;
    std::vector<std::string> operands;
  };

  std::map<std::string, uint16_t> symbols;
  std::vector<Item> items;

  auto syntax_error = [](int line, const std::string& msg) -> void {
    fail(Errc::assembly_error, "line " + std::to_string(line) + ": " + msg);
  };

  // pass 1: addresses and symbols
  {
    std::istringstream in(source);
    std::string raw;
    int line_no = 0;
    uint16_t lc = kDefaultLoad;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string line = trim(strip_comment(raw));
      while (!line.empty()) {  // labels, possibly followed by an instruction
        size_t colon = line.find(':');
        size_t space = line.find_first_of(" \t");
        if (colon != std::string::npos && (space == std::string::npos || colon < space)) {
          std::string label = trim(line.substr(0, colon));
          require(!label.empty(), Errc::assembly_error,
                  "line " + std::to_string(line_no) + ": empty label");
          require(!symbols.count(label), Errc::assembly_error,
                  "line " + std::to_string(line_no) + ": duplicate label: " + label);
          symbols[label] = lc;
          line = trim(line.substr(colon + 1));
          continue;
        }
        break;
      }
      if (line.empty()) continue;

      size_t space = line.find_first_of(" \t");
      std::string mnem = upper(line.substr(0, space));
      std::string rest = space == std::string::npos ? "" : trim(line.substr(space));
      auto operands = split_operands(rest);
      Item item{line_no, lc, mnem, operands};

      if (mnem == ".ORG") {
        if (operands.size() != 1) syntax_error(line_no, ".org takes one operand");
        long v;
        if (!parse_number(operands[0], v) || v < 0 || v >= kMemSize)
          syntax_error(line_no, "bad .org address");
        lc = uint16_t(v);
        continue;  // no emission
      }
      if (mnem == ".WORD") {
        lc = uint16_t(lc + 2 * operands.size());
      } else if (mnem == ".BYTE") {
        lc = uint16_t(lc + operands.size());
      } else if (mnem == ".ASCII") {
        if (operands.size() != 1 || operands[0].size() < 2 || operands[0].front() != '"' ||
            operands[0].back() != '"')
          syntax_error(line_no, ".ascii takes one quoted string");
        lc = uint16_t(lc + operands[0].size() - 2);
      } else if (mnem == "LDI") {
        lc = uint16_t(lc + 4);
      } else if (mnem == "JUMP" || mnem == "JZ" || mnem == "JNZ" || mnem == "JC" ||
                 mnem == "JNC") {
        bool indirect = operands.size() == 1 && !operands[0].empty() && operands[0][0] == '[';
        lc = uint16_t(lc + (indirect ? 2 : 4));
      } else {
        lc = uint16_t(lc + 2);
      }
      items.push_back(item);
      require(lc <= kMemSize, Errc::assembly_error,
              "line " + std::to_string(line_no) + ": program exceeds memory");
    }
  }

  // pass 2: emission
  Bytes image;
  auto emit_at = [&](uint16_t addr, uint16_t word) {
    size_t off = size_t(addr) - kDefaultLoad;
    if (image.size() < off + 2) image.resize(off + 2, 0);
    image[off] = uint8_t(word);
    image[off + 1] = uint8_t(word >> 8);
  };
  auto emit_byte_at = [&](uint16_t addr, uint8_t b) {
    size_t off = size_t(addr) - kDefaultLoad;
    if (image.size() < off + 1) image.resize(off + 1, 0);
    image[off] = b;
  };
  auto resolve = [&](const Expr& e, int line_no) -> uint16_t {
    long v = e.offset;
    if (!e.label.empty()) {
      auto it = symbols.find(e.label);
      require(it != symbols.end(), Errc::assembly_error,
              "line " + std::to_string(line_no) + ": undefined label: " + e.label);
      v += it->second;
    }
    require(v >= -0x8000 && v <= 0xFFFF, Errc::assembly_error,
            "line " + std::to_string(line_no) + ": value out of 16-bit range");
    return uint16_t(v & 0xFFFF);
  };

  static const std::map<std::string, Opcode> kAlu{
      {"ADC", kAdc}, {"SBB", kSbb}, {"SUB", kSub}, {"CMP", kCmp}, {"MUL", kMul},
      {"AND", kAnd}, {"OR", kOr},   {"XOR", kXor}, {"LSL", kLsl}, {"LSR", kLsr},
      {"ASR", kAsr}, {"ROR", kRor}};
  static const std::map<std::string, Opcode> kJcc{
      {"JUMP", kJump}, {"JZ", kJz}, {"JNZ", kJnz}, {"JC", kJc}, {"JNC", kJnc}};

  for (const auto& item : items) {
    const int ln = item.line_no;
    const auto& ops = item.operands;
    uint16_t at = item.address;

    if (item.mnemonic == ".WORD") {
      for (size_t i = 0; i < ops.size(); ++i)
        emit_at(uint16_t(at + 2 * i), resolve(parse_expr(ops[i], ln), ln));
      continue;
    }
    if (item.mnemonic == ".BYTE") {
      for (size_t i = 0; i < ops.size(); ++i) {
        uint16_t v = resolve(parse_expr(ops[i], ln), ln);
        require(v <= 0xFF, Errc::assembly_error,
                "line " + std::to_string(ln) + ": byte value out of range");
        emit_byte_at(uint16_t(at + i), uint8_t(v));
      }
      continue;
    }
    if (item.mnemonic == ".ASCII") {
      std::string text = ops[0].substr(1, ops[0].size() - 2);
      for (size_t i = 0; i < text.size(); ++i) emit_byte_at(uint16_t(at + i), uint8_t(text[i]));
      continue;
    }

    if (auto it = kAlu.find(item.mnemonic); it != kAlu.end()) {
      if (ops.size() != 2) syntax_error(ln, item.mnemonic + " takes two registers");
      int rd = reg_index(ops[0], 'R'), rs = reg_index(ops[1], 'R');
      if (rd < 0 || rs < 0) syntax_error(ln, "expected data registers: " + item.mnemonic);
      emit_at(at, encode_word(it->second, uint8_t(rd), uint8_t(rs), kClassRR, 0));
      continue;
    }
    if (item.mnemonic == "MOVE") {
      if (ops.size() != 2) syntax_error(ln, "MOVE takes two registers");
      int rr_d = reg_index(ops[0], 'R'), rr_s = reg_index(ops[1], 'R');
      int dp_d = reg_index(ops[0], 'D'), dp_s = reg_index(ops[1], 'D');
      if (rr_d >= 0 && rr_s >= 0)
        emit_at(at, encode_word(kMove, uint8_t(rr_d), uint8_t(rr_s), kClassRR, 0));
      else if (dp_d >= 0 && dp_d < 4 && rr_s >= 0)
        emit_at(at, encode_word(kMove, uint8_t(dp_d), uint8_t(rr_s), kClassRD, 0));
      else if (rr_d >= 0 && dp_s >= 0 && dp_s < 4)
        emit_at(at, encode_word(kMove, uint8_t(rr_d), uint8_t(dp_s), kClassDR, 0));
      else
        syntax_error(ln, "bad MOVE operands");
      continue;
    }
    if (item.mnemonic == "LDI") {
      if (ops.size() != 2 || ops[1].empty() || ops[1][0] != '#')
        syntax_error(ln, "LDI takes a register and #immediate");
      int rd = reg_index(ops[0], 'R');
      if (rd < 0) syntax_error(ln, "LDI destination must be a data register");
      emit_at(at, encode_word(kLdi, uint8_t(rd), 0, kClassRR, 0));
      emit_at(uint16_t(at + 2), resolve(parse_expr(ops[1].substr(1), ln), ln));
      continue;
    }
    if (item.mnemonic == "LDM" || item.mnemonic == "STM") {
      // LDM Rd, [Ds] / STM Rs, [Dd]: data register first, pointer second
      if (ops.size() != 2) syntax_error(ln, item.mnemonic + " takes two operands");
      bool is_ldm = item.mnemonic == "LDM";
      int r = reg_index(ops[0], 'R');
      const std::string& ptr = ops[1];
      if (r < 0 || ptr.size() < 4 || ptr.front() != '[' || ptr.back() != ']')
        syntax_error(ln, "expected Rn and [Dn]");
      int d = reg_index(trim(ptr.substr(1, ptr.size() - 2)), 'D');
      if (d < 0 || d > 3) syntax_error(ln, "expected pointer register in brackets");
      if (is_ldm)
        emit_at(at, encode_word(kLdm, uint8_t(r), uint8_t(d), kClassDR, 0));
      else
        emit_at(at, encode_word(kStm, uint8_t(d), uint8_t(r), kClassRD, 0));
      continue;
    }
    if (auto it = kJcc.find(item.mnemonic); it != kJcc.end()) {
      if (ops.size() != 1) syntax_error(ln, item.mnemonic + " takes one target");
      if (ops[0].front() == '[') {
        int d = reg_index(trim(ops[0].substr(1, ops[0].size() - 2)), 'D');
        if (d < 0 || d > 3) syntax_error(ln, "expected pointer register in brackets");
        emit_at(at, encode_word(it->second, 0, uint8_t(d), kClassRR, 1));
      } else {
        emit_at(at, encode_word(it->second, 0, 0, kClassRR, 0));
        emit_at(uint16_t(at + 2), resolve(parse_expr(ops[0], ln), ln));
      }
      continue;
    }
    if (item.mnemonic == "SYS") {
      if (ops.size() != 1) syntax_error(ln, "SYS takes a function number");
      std::string arg = ops[0];
      if (!arg.empty() && arg[0] == '#') arg = arg.substr(1);
      long fn;
      if (!parse_number(arg, fn) || fn < 0 || fn > 2) syntax_error(ln, "SYS function must be 0..2");
      emit_at(at, encode_word(kSys, uint8_t(fn), 0, kClassRR, 0));
      continue;
    }
    if (item.mnemonic == "HALT") {
      if (!ops.empty()) syntax_error(ln, "HALT takes no operands");
      emit_at(at, encode_word(kHalt, 0, 0, kClassRR, 0));
      continue;
    }
    syntax_error(ln, "unknown mnemonic: " + item.mnemonic);
  }

  DynaRiscProgram prog;
  prog.image = std::move(image);
  prog.symbols = std::move(symbols);
  require(kDefaultLoad + prog.image.size() <= kMemSize, Errc::assembly_error,
          "program image exceeds memory");
  return prog;
}

// ---------------------------------------------------------------------------
// Interpreter

struct DynaRiscState {
  std::array<uint16_t, 8> r{};
  std::array<uint16_t, 4> d{};
  uint16_t pc = kDefaultLoad;
  uint8_t flag_c = 0;
  uint8_t flag_z = 0;
  std::vector<uint8_t> mem = std::vector<uint8_t>(kMemSize, 0);
  bool halted = false;
  uint16_t exit_code = 0;
  uint64_t step_count = 0;
  Bytes input;
  Bytes output;
};

[[noreturn]] inline void dr_trap(const DynaRiscState& s, const std::string& cause) {
  fail(Errc::trap, "dynarisc trap: " + cause + " at pc=0x" +
                       [&] {
                         char buf[8];
                         std::snprintf(buf, sizeof buf, "%04X", s.pc);
                         return std::string(buf);
                       }() +
                       " step=" + std::to_string(s.step_count));
}

inline DynaRiscState dr_load(const DynaRiscProgram& prog, Bytes input) {
  require(prog.load_address + prog.image.size() <= kMemSize, Errc::length_error,
          "dynarisc: image does not fit memory");
  DynaRiscState s;
  std::copy(prog.image.begin(), prog.image.end(), s.mem.begin() + prog.load_address);
  s.pc = prog.entry;
  s.input = std::move(input);
  return s;
}

inline void dr_step(DynaRiscState& s) {
  require(!s.halted, Errc::usage_error, "dr_step: machine is halted");
  if (s.pc > kMemSize - 2) dr_trap(s, "execution past 0x7FFE");
  uint16_t w = uint16_t(s.mem[s.pc] | (s.mem[s.pc + 1] << 8));
  uint16_t next = uint16_t(s.pc + 2);
  const uint8_t opcode = w >> 11;
  const uint8_t rd = (w >> 8) & 7;
  const uint8_t rs = (w >> 5) & 7;
  const uint8_t cls = (w >> 3) & 3;
  const uint8_t mode = (w >> 2) & 1;

  auto fetch_operand = [&]() -> uint16_t {
    if (next > kMemSize - 2) dr_trap(s, "operand past 0x7FFE");
    uint16_t v = uint16_t(s.mem[next] | (s.mem[next + 1] << 8));
    next = uint16_t(next + 2);
    return v;
  };
  auto set_z = [&](uint16_t v) { s.flag_z = v == 0 ? 1 : 0; };

  switch (opcode) {
    case kAdc: {
      uint32_t t = uint32_t(s.r[rd]) + s.r[rs] + s.flag_c;
      s.flag_c = t >> 16 ? 1 : 0;
      s.r[rd] = uint16_t(t);
      set_z(s.r[rd]);
      break;
    }
    case kSbb: {
      uint32_t sub = uint32_t(s.r[rs]) + s.flag_c;
      s.flag_c = uint32_t(s.r[rd]) < sub ? 1 : 0;
      s.r[rd] = uint16_t(s.r[rd] - sub);
      set_z(s.r[rd]);
      break;
    }
    case kSub: {
      s.flag_c = s.r[rd] < s.r[rs] ? 1 : 0;
      s.r[rd] = uint16_t(s.r[rd] - s.r[rs]);
      set_z(s.r[rd]);
      break;
    }
    case kCmp: {
      uint16_t diff = uint16_t(s.r[rd] - s.r[rs]);
      s.flag_c = s.r[rd] < s.r[rs] ? 1 : 0;
      set_z(diff);
      break;
    }
    case kMul: {
      uint32_t prod = uint32_t(s.r[rd]) * s.r[rs];
      s.flag_c = prod >= 0x10000 ? 1 : 0;
      s.r[rd] = uint16_t(prod);
      set_z(s.r[rd]);
      break;
    }
    case kAnd:
      s.r[rd] &= s.r[rs];
      set_z(s.r[rd]);
      break;
    case kOr:
      s.r[rd] |= s.r[rs];
      set_z(s.r[rd]);
      break;
    case kXor:
      s.r[rd] ^= s.r[rs];
      set_z(s.r[rd]);
      break;
    case kLsl: {
      int cnt = s.r[rs] & 15;
      if (cnt) {
        s.flag_c = (s.r[rd] >> (16 - cnt)) & 1;
        s.r[rd] = uint16_t(s.r[rd] << cnt);
      }
      set_z(s.r[rd]);
      break;
    }
    case kLsr: {
      int cnt = s.r[rs] & 15;
      if (cnt) {
        s.flag_c = (s.r[rd] >> (cnt - 1)) & 1;
        s.r[rd] = uint16_t(s.r[rd] >> cnt);
      }
      set_z(s.r[rd]);
      break;
    }
    case kAsr: {
      int cnt = s.r[rs] & 15;
      if (cnt) {
        s.flag_c = (s.r[rd] >> (cnt - 1)) & 1;
        s.r[rd] = uint16_t(int16_t(s.r[rd]) >> cnt);
      }
      set_z(s.r[rd]);
      break;
    }
    case kRor: {
      int cnt = s.r[rs] & 15;
      if (cnt) {
        s.flag_c = (s.r[rd] >> (cnt - 1)) & 1;
        s.r[rd] = uint16_t((s.r[rd] >> cnt) | (s.r[rd] << (16 - cnt)));
      }
      set_z(s.r[rd]);
      break;
    }
    case kMove:
      if (cls == kClassRR)
        s.r[rd] = s.r[rs];
      else if (cls == kClassRD)
        s.d[rd & 3] = s.r[rs];
      else if (cls == kClassDR)
        s.r[rd] = s.d[rs & 3];
      else
        dr_trap(s, "bad MOVE class");
      break;
    case kLdi:
      s.r[rd] = fetch_operand();
      break;
    case kLdm: {
      uint16_t addr = s.d[rs & 3];
      if (addr >= kMemSize) dr_trap(s, "LDM address out of range");
      s.r[rd] = s.mem[addr];
      break;
    }
    case kStm: {
      uint16_t addr = s.d[rd & 3];
      if (addr >= kMemSize) dr_trap(s, "STM address out of range");
      s.mem[addr] = uint8_t(s.r[rs]);
      break;
    }
    case kJump:
    case kJz:
    case kJnz:
    case kJc:
    case kJnc: {
      uint16_t target = mode ? s.d[rs & 3] : fetch_operand();
      bool take = opcode == kJump || (opcode == kJz && s.flag_z) || (opcode == kJnz && !s.flag_z) ||
                  (opcode == kJc && s.flag_c) || (opcode == kJnc && !s.flag_c);
      if (take) next = target;
      break;
    }
    case kSys:
      switch (rd) {
        case 0: {
          uint32_t off = (uint32_t(s.r[1]) << 16) | s.r[0];
          s.r[2] = off < s.input.size() ? s.input[off] : 0xFFFF;
          break;
        }
        case 1:
          s.output.push_back(uint8_t(s.r[2]));
          break;
        case 2:
          s.r[0] = uint16_t(s.input.size());
          s.r[1] = uint16_t(s.input.size() >> 16);
          break;
        default:
          dr_trap(s, "invalid SYS function");
      }
      break;
    case kHalt:
      s.halted = true;
      s.exit_code = s.r[0];
      break;
    default:
      dr_trap(s, "invalid opcode " + std::to_string(opcode));
  }
  s.pc = next;
  ++s.step_count;
}

struct DrRunResult {
  Bytes output;
  uint16_t exit_code = 0;
  uint64_t step_count = 0;
};

inline DrRunResult dr_run(const DynaRiscProgram& prog, Bytes input, uint64_t max_steps) {
  DynaRiscState s = dr_load(prog, std::move(input));
  while (!s.halted) {
    require(s.step_count < max_steps, Errc::timeout,
            "dynarisc: exceeded " + std::to_string(max_steps) + " steps");
    dr_step(s);
  }
  return {std::move(s.output), s.exit_code, s.step_count};
}

}  // namespace ule::dynarisc
