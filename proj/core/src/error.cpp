#include "memaudit/error.hpp"

namespace memaudit {

const char* to_string(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::Config: return "config";
    case ErrorCategory::Argument: return "argument";
    case ErrorCategory::Format: return "format";
    case ErrorCategory::State: return "state";
    case ErrorCategory::Degenerate: return "degenerate";
    case ErrorCategory::Training: return "training";
  }
  return "unknown";
}

}  // namespace memaudit
