#pragma once

#include <stdexcept>
#include <string>

namespace clsr {

enum class ErrorKind {
  Config,        // invalid configuration or preset
  Shape,         // tensor / situation dimension mismatch
  State,         // operation called in the wrong model/optimizer state
  Numeric,       // zero norm, non-finite loss
  Input,         // malformed or unresolvable input data
  Io,            // file missing or unreadable
  Format,        // bad magic / version in a binary artifact
  EmptyDataset,  // preparation produced nothing to train on
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) throw Error(kind, what);
}

}  // namespace clsr
