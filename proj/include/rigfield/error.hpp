#pragma once

#include <stdexcept>
#include <string>

namespace rigfield {

enum class ErrorKind {
  Parse,       // malformed input text
  Validation,  // input violates a documented invariant or precondition
  Io,          // file could not be read or written
  Numeric,     // solver produced a non-finite value
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& what) {
  throw Error(ErrorKind::Validation, what);
}

inline void require(bool condition, const std::string& what) {
  if (!condition) fail_validation(what);
}

}  // namespace rigfield
