#pragma once

#include <stdexcept>
#include <string>

namespace ontox {

// Raised for malformed inputs and invalid configurations. The CLI maps this
// to exit code 2; anything else escaping a command is an internal error.
class InputError : public std::runtime_error {
 public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ontox
