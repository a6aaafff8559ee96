#pragma once

#include <stdexcept>
#include <string>

namespace supou {

// Argument outside the region where a transform or moment exists.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The parameter set admits no valid call damping (strip too narrow) or
// otherwise cannot be priced.
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Quadrature or node construction failed to reach the requested accuracy.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data (files, quotes, configuration).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A quoted price lies outside the static no-arbitrage band.
class ArbitrageError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace supou
