#pragma once

#include <stdexcept>
#include <string>

namespace qsense {

/// Invalid argument or violated precondition.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time evolution could not proceed (e.g. a non-finite signal sample).
class EvolutionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inconsistent physical model (degenerate readout peaks, bad PSD parameters).
class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested spectral content lies above the sampling Nyquist frequency.
class AliasingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An estimator failed to produce a result (no peak, non-convergent integral).
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation is not defined for the requested sequence or model.
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qsense
