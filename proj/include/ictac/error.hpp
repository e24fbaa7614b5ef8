#pragma once

#include <stdexcept>
#include <string>

namespace ictac {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shape, mode or index arguments that do not fit the tensor they apply to.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Configuration values outside their valid range (ranks, weights, tolerances).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// A computation produced NaN or Inf.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// File could not be read or written, or has an unsupported format.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace ictac
