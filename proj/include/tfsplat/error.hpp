#pragma once

#include <stdexcept>
#include <string>

namespace tfsplat {

// All recoverable failures in the library surface as this exception type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace tfsplat
