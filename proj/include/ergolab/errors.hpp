#pragma once

#include <stdexcept>
#include <string>

namespace ergolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value violates a documented construction invariant (bad config, bad spec).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Newton inversion of a perturbed map did not converge.
class NonConvergence : public Error {
 public:
  using Error::Error;
};

/// Exponent estimation produced non-finite growth.
class Degenerate : public Error {
 public:
  using Error::Error;
};

/// More than half of the sampled stable directions were unreliable.
class UnreliableDirection : public Error {
 public:
  using Error::Error;
};

/// Requested index lies outside the available orbit data.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// A second-map hypothesis (line-pair preservation) was not met.
class PreconditionFail : public Error {
 public:
  using Error::Error;
};

/// An unstable curve left its chart during construction.
class ChartOverflow : public Error {
 public:
  using Error::Error;
};

/// Too few samples fell into the tube around an unstable curve.
class InsufficientSlice : public Error {
 public:
  using Error::Error;
};

}  // namespace ergolab
