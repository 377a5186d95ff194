#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace incad {

// Failure classes map one-to-one onto CLI exit codes (2, 3, 4).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Too few density-tail points to fit the GPD. Callers widen the tail or defer.
class InsufficientTailError : public NumericalError {
 public:
  InsufficientTailError(std::size_t available, std::size_t required)
      : NumericalError("GPD tail fit needs at least " + std::to_string(required) +
                       " points below the threshold, got " + std::to_string(available)),
        available_(available),
        required_(required) {}

  std::size_t available() const noexcept { return available_; }
  std::size_t required() const noexcept { return required_; }

 private:
  std::size_t available_;
  std::size_t required_;
};

}  // namespace incad
