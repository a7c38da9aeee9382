// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace bpnet {

/// Broad failure categories. The C API maps each onto a status code and the
/// CLI onto an exit code.
enum class ErrorKind {
  InvalidArgument, ///< bad parameter or precondition violation
  Data,            ///< malformed or inconsistent input data
  Numeric,         ///< NaN/Inf or a degenerate numeric state
  Io,              ///< filesystem failure
};

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string &what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string &what);

inline void require(bool condition, const std::string &what) {
  if (!condition)
    fail(ErrorKind::InvalidArgument, what);
}

} // namespace bpnet
