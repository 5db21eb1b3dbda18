#pragma once

#include <stdexcept>
#include <string>

namespace tabbin {

// Bad user input: malformed files, invalid config values, precondition
// violations. The CLI maps this to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Failure during execution: non-finite losses, I/O breakage mid-run,
// corrupt checkpoints. The CLI maps this to exit code 2.
class RuntimeFailure : public std::runtime_error {
 public:
  explicit RuntimeFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace tabbin
