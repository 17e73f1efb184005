#include "ergo/error.hpp"

namespace ergo {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::dimension_mismatch: return "dimension_mismatch";
    case ErrorKind::invalid_model: return "invalid_model";
    case ErrorKind::invalid_policy: return "invalid_policy";
    case ErrorKind::divergence: return "divergence";
    case ErrorKind::sampling: return "sampling";
    case ErrorKind::degenerate_fit: return "degenerate_fit";
    case ErrorKind::selection_failure: return "selection_failure";
    case ErrorKind::cap_exceeded: return "cap_exceeded";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::schema: return "schema";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

}  // namespace ergo
