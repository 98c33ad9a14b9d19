#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace jsdscore {

enum class ErrorKind {
  InvalidInput,
  GridMismatch,
  NoFeaturesAvailable,
  NotFound,
  ImputationImpossible,
  OutOfOrder,
  UnknownFeature,
  ParseError,
  IncompatibleModel,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. Every failure path raises one of these with a kind
/// that callers (the CLI in particular) can branch on.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// ParseError that remembers the 1-based input line it refers to (0 when the
/// input is not line oriented).
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorKind::ParseError,
              line > 0 ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace jsdscore
