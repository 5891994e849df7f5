#pragma once

#include <stdexcept>
#include <string>

namespace srn {

enum class ErrorKind {
  Usage,    // bad arguments or configuration
  Data,     // input data violates a contract (labels, sizes, duplicates)
  Format,   // malformed file or wire format
  Shape,    // tensor or architecture shape mismatch
  Numeric,  // non-finite values during training
  Io,       // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace srn
