#pragma once

#include <stdexcept>
#include <string>

namespace koop {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid argument values (out-of-range parameters, inconsistent metadata).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Incompatible matrix/sequence shapes.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Not enough data to perform a fit.
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

/// A numeric kernel failed (non-convergence, overflow, non-finite result).
class NumericError : public Error {
public:
    using Error::Error;
};

/// Requested certificate or solve is impossible for an unstable spectrum.
class InstabilityError : public Error {
public:
    using Error::Error;
};

/// A simulation produced non-finite state; carries the last valid time.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, double last_valid_time)
        : Error(msg), last_valid_time(last_valid_time) {}
    double last_valid_time;
};

/// File parsing / serialization failure.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace koop
