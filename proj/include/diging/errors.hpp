#pragma once

#include <stdexcept>
#include <string>

namespace diging {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientHistory : Error {
  using Error::Error;
};

struct NotDoublyStochastic : Error {
  using Error::Error;
};

struct HeterogeneityTooLarge : Error {
  using Error::Error;
};

struct RateNotContractive : Error {
  using Error::Error;
};

struct LambdaBelowDelta : Error {
  using Error::Error;
};

struct GainProductNotContractive : Error {
  using Error::Error;
};

struct ReferenceSolverDiverged : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace diging
