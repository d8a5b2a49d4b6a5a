#pragma once

#include <stdexcept>
#include <string>

namespace f4flow {

/// Error with a stable machine-readable code alongside the human message.
/// Codes used across the library: "io", "bad-magic", "bad-version",
/// "truncated", "grid-mismatch", "out-of-range", "bad-argument",
/// "aliasing", "spec-mismatch", "degenerate-reference", "non-finite".
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(const std::string& code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool ok, const std::string& code, const std::string& message) {
  if (!ok) fail(code, message);
}

}  // namespace f4flow
