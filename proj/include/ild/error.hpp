#pragma once

#include <stdexcept>
#include <string>

namespace ild {

enum class ErrorCode {
  DimensionMismatch,
  NotLowerTriangular,
  NonPositiveDiagonal,
  SingularMatrix,
  InvalidArgument,
  DomainOutOfRange,
  EmptyInput,
  PreconditionViolated,
  TriangularityBroken,
  Parse,
  Io,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace ild
