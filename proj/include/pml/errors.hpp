#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pml {

struct InvalidParameter : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DimensionMismatch : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedConfiguration : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Raised when a training step produces a non-finite loss. Carries the step
// index so callers can report where the run diverged.
class NumericFailure : public std::runtime_error {
 public:
  NumericFailure(std::int64_t step, const std::string& what)
      : std::runtime_error(what), step_(step) {}

  std::int64_t step() const noexcept { return step_; }

 private:
  std::int64_t step_;
};

}  // namespace pml
