#pragma once

#include <stdexcept>
#include <string>

namespace cclb {

enum class ErrorKind {
  Dimension,     // mismatched sizes between inputs
  Parameter,     // argument outside its admissible range
  Capacity,      // instance exceeds a configured cap
  Input,         // malformed text input or unreadable file
  Solver,        // simplex failure (stall, iteration limit)
  Conditioning,  // conditioning on a zero-probability event
  Degenerate,    // input lacks the structure an operation needs
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) fail(kind, what);
}

}  // namespace cclb
