#pragma once

#include <stdexcept>
#include <string>

namespace sloppy {

// Invalid value for a parameter or transform input (e.g. log of a
// non-positive value, logit of an out-of-bounds value).
struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dimension mismatch between vectors/matrices and the declared space.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration (file contents, thresholds, flag combinations).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Lookup of an unknown name (parameter, mechanism, fixture).
struct KeyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Operation applied to an object in the wrong state (e.g. marginal
// summaries of a non-terminal particle set).
struct StateError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct OptimizationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Finite-difference stencil hit a non-finite function value.
struct StencilError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PriorCovError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SpectrumError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sloppy
