#pragma once

#include <stdexcept>
#include <string>

namespace ule {

enum class Errc {
  length_error,
  format_error,
  corruption_error,
  malformed_stream,
  capacity_error,
  assembly_error,
  trap,
  timeout,
  locate_error,
  header_error,
  emblem_decode_error,
  unrecoverable_codeword,
  unrecoverable_group,
  parse_error,
  io_error,
  usage_error,
};

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& msg) : std::runtime_error(msg), code_(code) {}
  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

[[noreturn]] inline void fail(Errc code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, Errc code, const std::string& msg) {
  if (!cond) fail(code, msg);
}

}  // namespace ule
