#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace perfquant {

/// Coarse failure category. The CLI prints it as the first token of its
/// single-line error message so scripts can branch on it.
enum class ErrorKind {
  io,            // file missing, unreadable or unwritable
  format,        // file exists but its content violates the on-disk contract
  schema,        // configuration rejected
  precondition,  // caller passed arguments outside an operation's domain
  numeric,       // computation undefined for the given data
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) throw Error(kind, message);
}

}  // namespace perfquant
