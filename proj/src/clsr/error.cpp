#include "clsr/error.hpp"

namespace clsr {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::Shape: return "shape";
    case ErrorKind::State: return "state";
    case ErrorKind::Numeric: return "numeric";
    case ErrorKind::Input: return "input";
    case ErrorKind::Io: return "io";
    case ErrorKind::Format: return "format";
    case ErrorKind::EmptyDataset: return "empty_dataset";
  }
  return "unknown";
}

}  // namespace clsr
