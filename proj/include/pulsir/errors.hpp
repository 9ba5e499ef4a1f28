#pragma once

#include <stdexcept>
#include <string>

namespace pulsir {

/// Invalid parameter or state (non-finite values, out-of-range inputs).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested object (periodic orbit, threshold) does not exist for these parameters.
class ExistenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical procedure failed (quadrature, integration, root finding).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pulsir
