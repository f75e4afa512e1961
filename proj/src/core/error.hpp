#pragma once

#include <stdexcept>
#include <string>

namespace lyapnet {

// Error categories shared between the C++ core, the C API status codes and
// the CLI exit paths.
enum class ErrorCode {
  None = 0,
  Shape,
  Numeric,
  Size,
  Budget,
  Config,
  Input,
  Format,
  Contract,
  Planning,
  DegenerateCone,
  ComplexSlopes,
  Io,
  Usage,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void raise(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::None: return "ok";
    case ErrorCode::Shape: return "shape-error";
    case ErrorCode::Numeric: return "numeric-error";
    case ErrorCode::Size: return "size-error";
    case ErrorCode::Budget: return "budget-error";
    case ErrorCode::Config: return "config-error";
    case ErrorCode::Input: return "input-error";
    case ErrorCode::Format: return "format-error";
    case ErrorCode::Contract: return "contract-error";
    case ErrorCode::Planning: return "planning-error";
    case ErrorCode::DegenerateCone: return "degenerate-cone-error";
    case ErrorCode::ComplexSlopes: return "complex-slopes-error";
    case ErrorCode::Io: return "io-error";
    case ErrorCode::Usage: return "usage-error";
  }
  return "unknown-error";
}

}  // namespace lyapnet
