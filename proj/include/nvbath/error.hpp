#pragma once

#include <stdexcept>
#include <string>

namespace nvbath {

enum class ErrorCode {
  InvalidArgument = 1,
  Io = 2,
  Numerical = 3,
  Domain = 4,
  Internal = 5,
};

// All library failures surface as this exception; the C API maps the code to
// an nvb_status value.
class Error : public std::runtime_error {
public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) { throw Error(code, msg); }

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw Error(ErrorCode::InvalidArgument, msg);
}

}  // namespace nvbath
