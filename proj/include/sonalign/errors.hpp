#pragma once

#include <stdexcept>

namespace sonalign {

// Invalid configuration or caller-supplied option.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Shape, batch-size, or sample-count mismatch between numeric operands.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A forward cache that does not belong to the parameters/batch it is used with.
struct CacheError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Structurally valid input that is numerically degenerate
// (zero-norm row, zero variance, empty signal).
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Non-finite value where a finite one is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Rank-deficient covariance met with ridge == 0.
struct SingularityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Text or binary input that cannot be parsed; message carries line or byte offset.
struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Records that parse but violate the dataset schema.
struct SchemaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Placeholder or key that does not resolve to a known parameter.
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// OSC message that cannot be encoded or decoded.
struct OscError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// UDP transport failure, including payloads too large for a datagram.
struct TransportError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Filesystem or stream failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sonalign
