#pragma once

#include <stdexcept>
#include <string>

namespace starjet {

// Error taxonomy mirrored by the CLI exit codes:
//   schema (2), precondition/truncation/context (3), internal (4).
enum class ErrorKind { Schema, Precondition, Truncation, Context, Internal };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string msg) : std::runtime_error(std::move(msg)), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

  static Error schema(std::string msg) { return Error(ErrorKind::Schema, std::move(msg)); }
  static Error precondition(std::string msg) { return Error(ErrorKind::Precondition, std::move(msg)); }
  static Error truncation(std::string msg) { return Error(ErrorKind::Truncation, std::move(msg)); }
  static Error context(std::string msg) { return Error(ErrorKind::Context, std::move(msg)); }
  static Error internal(std::string msg) { return Error(ErrorKind::Internal, std::move(msg)); }

private:
  ErrorKind kind_;
};

inline int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::Schema: return 2;
    case ErrorKind::Internal: return 4;
    default: return 3;
  }
}

}  // namespace starjet
