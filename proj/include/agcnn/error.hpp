#pragma once

#include <stdexcept>
#include <string>

namespace agcnn {

// Error categories map one-to-one onto the CLI exit codes.
enum class ErrorKind {
  usage,       // bad invocation          -> exit 2
  config,      // invalid configuration   -> exit 3
  data,        // malformed input data    -> exit 4
  divergence,  // non-finite training loss-> exit 5
  io,          // filesystem failure      -> exit 6
  shape,       // tensor extent mismatch  -> exit 3
  contract,    // API precondition broken -> exit 3
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& msg)
      : std::runtime_error(msg), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

  int exit_code() const {
    switch (kind_) {
      case ErrorKind::usage: return 2;
      case ErrorKind::config: return 3;
      case ErrorKind::data: return 4;
      case ErrorKind::divergence: return 5;
      case ErrorKind::io: return 6;
      case ErrorKind::shape: return 3;
      case ErrorKind::contract: return 3;
    }
    return 1;
  }

  const char* kind_name() const {
    switch (kind_) {
      case ErrorKind::usage: return "usage";
      case ErrorKind::config: return "config";
      case ErrorKind::data: return "data";
      case ErrorKind::divergence: return "divergence";
      case ErrorKind::io: return "io";
      case ErrorKind::shape: return "shape";
      case ErrorKind::contract: return "contract";
    }
    return "error";
  }

 private:
  ErrorKind kind_;
};

}  // namespace agcnn
