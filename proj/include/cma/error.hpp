#pragma once

#include <stdexcept>
#include <string>

namespace cma {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument or violated precondition on an input.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A Newton iteration left the positive cone and could not recover.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// Measure is not dominated by the Monge-Ampere measure of the given function.
class DominationError : public Error {
 public:
  using Error::Error;
};

}  // namespace cma
