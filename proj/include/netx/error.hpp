#pragma once

#include <stdexcept>
#include <string>

namespace netx {

// Bad input: malformed files, out-of-range parameters, violated preconditions.
// The CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A computation that cannot produce a finite answer (singular design,
// undefined rescale constant, degenerate propensities). Exit code 3.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ValidationError(message);
}

}  // namespace netx
