#pragma once

#include <stdexcept>
#include <string>

namespace litege {

// invalid_input maps to process exit code 2, runtime to 1.
enum class ErrorKind { invalid_input, runtime };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail_invalid(const std::string& message) {
  throw Error(ErrorKind::invalid_input, message);
}

[[noreturn]] inline void fail_runtime(const std::string& message) {
  throw Error(ErrorKind::runtime, message);
}

}  // namespace litege
