#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace relaxmt {

enum class ErrorCode {
  InvalidArgument,
  Domain,
  Schema,
  Parse,
  Io,
  Infeasible,
  Certificate,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "E_INVALID_ARGUMENT";
    case ErrorCode::Domain: return "E_DOMAIN";
    case ErrorCode::Schema: return "E_SCHEMA";
    case ErrorCode::Parse: return "E_PARSE";
    case ErrorCode::Io: return "E_IO";
    case ErrorCode::Infeasible: return "E_INFEASIBLE";
    case ErrorCode::Certificate: return "E_CERTIFICATE";
  }
  return "E_UNKNOWN";
}

/// Library-wide exception. The code is stable and machine-parsable; what()
/// carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& detail) {
  throw Error(code, detail);
}

inline void require(bool ok, ErrorCode code, const std::string& detail) {
  if (!ok) fail(code, detail);
}

}  // namespace relaxmt
