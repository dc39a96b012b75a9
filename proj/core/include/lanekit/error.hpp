#pragma once

#include <stdexcept>
#include <string>

namespace lanekit {

enum class ErrorKind {
  kDimension,  // mismatched array or grid sizes
  kDomain,     // value outside the operation's domain
  kParse,      // malformed text input
  kFormat,     // structurally valid input with the wrong schema
  kIo,         // filesystem failure
  kConfig,     // bad configuration
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kDimension: return "dimension";
    case ErrorKind::kDomain: return "domain";
    case ErrorKind::kParse: return "parse";
    case ErrorKind::kFormat: return "format";
    case ErrorKind::kIo: return "io";
    case ErrorKind::kConfig: return "config";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace lanekit
