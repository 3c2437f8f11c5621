#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dynroc {

enum class ErrorKind {
  io,
  schema,
  invalid_argument,
  empty_cohort,
  rank_deficient,
  separation,
  not_converged,
  insufficient_events,
  unknown_rule,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries a kind so the CLI can print a
/// stable machine-parseable prefix.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace dynroc
