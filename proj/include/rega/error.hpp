#pragma once

#include <stdexcept>
#include <string>

namespace rega {

// Base class for all library failures.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid user input: bad shapes, config values, CLI arguments.
struct ValueError : Error {
  using Error::Error;
};

// Shape/extent mismatch between tensors.
struct ShapeError : ValueError {
  using ValueError::ValueError;
};

// Filesystem or serialization problems.
struct IoError : Error {
  using Error::Error;
};

}  // namespace rega
