#pragma once

#include <stdexcept>
#include <string>

namespace evreflex {

enum class ErrorKind {
  InvalidArgument,
  Unsorted,
  OutOfWindow,
  EmptyWindow,
  Shape,
  Pose,
  SolverDivergence,
  UndefinedMetric,
  BadMagic,
  VersionMismatch,
  Truncated,
  SizeMismatch,
  CoordinateOutOfRange,
  Parse,
  UnknownKey,
  Range,
  Io,
  MissingStream,
  KindMismatch,
};

const char* to_string(ErrorKind kind);

// Every failure raised by the library carries a kind so callers (and tests)
// can branch on the cause without parsing messages.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

} // namespace evreflex
