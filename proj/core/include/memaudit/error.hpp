#pragma once

#include <stdexcept>
#include <string>

namespace memaudit {

// Error categories surfaced by the CLI as machine-readable codes.
enum class ErrorCategory {
  Config,      // bad parameters / invalid configuration
  Argument,    // malformed call (shape mismatch, out-of-range index)
  Format,      // unreadable or inconsistent file contents
  State,       // operation invoked before its inputs were populated
  Degenerate,  // numerically degenerate input (zero norm, empty set)
  Training,    // non-finite loss or other training failure
};

const char* to_string(ErrorCategory c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(std::string(to_string(category)) + ": " + message),
        category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

[[noreturn]] inline void throw_error(ErrorCategory c, const std::string& msg) {
  throw Error(c, msg);
}

}  // namespace memaudit
