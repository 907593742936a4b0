#pragma once

#include <stdexcept>
#include <string>

namespace graphssl {

// Failure caused by the contents of user-supplied data (matrices, labels,
// dataset files). The CLI maps these to exit code 2.
class DataError : public std::runtime_error {
 public:
  enum class Code {
    Generic,
    EmptyFile,
    RaggedRows,
    NonFinite,
    Parse,
    Io,
    InsufficientLabels,
    SingularCovariance,
    Degenerate,
  };

  DataError(Code code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  explicit DataError(const std::string& what)
      : DataError(Code::Generic, what) {}

  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

// Invalid experiment configuration: file syntax, unknown keys, out-of-range
// values. The CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace graphssl
