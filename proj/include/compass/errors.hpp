#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace compass {

// All toolkit errors carry a stable machine-readable kind ("DuplicateId",
// "Timeout", ...) next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

// Bad inputs: malformed files, violated preconditions, invalid configs.
// The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Transport or remote-model failures. The CLI maps these to exit code 2.
class ProviderError : public Error {
 public:
  using Error::Error;
};

}  // namespace compass
