#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace lvfa {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed expression text. Carries the byte offset of the offending token.
struct ParseError : Error {
  std::size_t offset;
  ParseError(std::size_t off, const std::string& what)
      : Error(what + " at offset " + std::to_string(off)), offset(off) {}
};

// Runtime failure while evaluating an expression (division by zero, ...).
struct EvalError : Error {
  using Error::Error;
};

// Caller handed in arguments that violate a precondition.
struct ArgError : Error {
  using Error::Error;
};

// Declared coefficient bounds contradict sampled values.
struct BoundsError : Error {
  double t;
  BoundsError(double t_, const std::string& what) : Error(what), t(t_) {}
};

// Numerical failure inside an integrator or quadrature (step underflow, ...).
struct NumericError : Error {
  using Error::Error;
};

// A certificate's own cross-checks failed (bound violation, inconsistency).
struct CertError : Error {
  using Error::Error;
};

// Growth exponents too close to zero to classify subspaces reliably.
struct SpectralGapError : Error {
  using Error::Error;
};

// Skeleton assembly could not certify a required piece.
struct SkeletonError : Error {
  using Error::Error;
};

}  // namespace lvfa
