#pragma once

#include <stdexcept>
#include <string>

namespace fignn {

// Bad input data: malformed records, unknown labels, negative numerics.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration or hyper-parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Internal invariant violated: shape mismatch, non-finite value, bad file format.
class InvariantError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public InvariantError {
public:
    using InvariantError::InvariantError;
};

class NumericError : public InvariantError {
public:
    using InvariantError::InvariantError;
};

}  // namespace fignn
