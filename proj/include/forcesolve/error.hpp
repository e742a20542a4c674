#pragma once

#include <stdexcept>
#include <string>

namespace forcesolve {

// Every failure carries a stable machine-readable code (e.g. "non_finite_state")
// plus a free-form human message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, std::string message)
      : std::runtime_error(code + ": " + message),
        code_(std::move(code)),
        message_(std::move(message)) {}

  const std::string& code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

 private:
  std::string code_;
  std::string message_;
};

}  // namespace forcesolve
