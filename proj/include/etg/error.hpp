#pragma once

#include <stdexcept>
#include <string>

namespace etg {

/// Error category, doubling as the CLI exit code.
enum class ErrorKind : int {
  usage = 1,  // bad flags / bad arguments
  data = 2,   // malformed or inconsistent input content
  io = 3,     // filesystem failures
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, std::string message)
      : std::runtime_error(std::move(message)), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }
  int exit_code() const noexcept { return static_cast<int>(kind_); }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_usage(std::string message) {
  throw Error(ErrorKind::usage, std::move(message));
}

[[noreturn]] inline void throw_data(std::string message) {
  throw Error(ErrorKind::data, std::move(message));
}

[[noreturn]] inline void throw_io(std::string message) {
  throw Error(ErrorKind::io, std::move(message));
}

}  // namespace etg
