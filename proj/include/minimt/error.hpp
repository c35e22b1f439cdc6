#pragma once

#include <stdexcept>
#include <string>

namespace minimt {

// Broad failure classes; the CLI maps these onto process exit codes.
enum class ErrorKind {
  Usage,     // bad flags, unknown names, inconsistent options
  Data,      // malformed or insufficient input data
  Model,     // incompatible or corrupt model artifacts
  Numeric,   // non-finite values during training
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void data_error(const std::string& what) {
  throw Error(ErrorKind::Data, what);
}

[[noreturn]] inline void usage_error(const std::string& what) {
  throw Error(ErrorKind::Usage, what);
}

[[noreturn]] inline void model_error(const std::string& what) {
  throw Error(ErrorKind::Model, what);
}

}  // namespace minimt
