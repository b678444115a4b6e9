#pragma once

#include <stdexcept>
#include <string>

namespace elq {

// Error categories surfaced by the CLI as machine-readable strings.
enum class ErrorCategory { io, format, config, version, internal };

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::io: return "io";
    case ErrorCategory::format: return "format";
    case ErrorCategory::config: return "config";
    case ErrorCategory::version: return "version";
    case ErrorCategory::internal: return "internal";
  }
  return "internal";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, std::string message)
      : std::runtime_error(std::move(message)), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void fail(ErrorCategory c, std::string message) {
  throw Error(c, std::move(message));
}

}  // namespace elq
