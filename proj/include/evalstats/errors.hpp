#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace evalstats {

/// Malformed or inconsistent input data (unreadable file, bad record, bad
/// schema). The CLI maps this to exit status 2.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}

  /// 1-based source line the error refers to, or 0 when not line-specific.
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// The data is well-formed but a statistical precondition does not hold
/// (too few questions, non-binary scores for the Bernoulli SE, mismatched
/// question sets). The CLI maps this to exit status 3.
class PreconditionError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace evalstats
