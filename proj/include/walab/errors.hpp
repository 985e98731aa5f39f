#pragma once

#include <stdexcept>
#include <string>

namespace walab {

// Base class for all errors raised by the library.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Operand shapes or lengths do not match.
struct DimensionError : Error {
    using Error::Error;
};

// A numeric precondition is violated (negative variance, unstable step size, ...).
struct DomainError : Error {
    using Error::Error;
};

// A configuration value is outside its allowed range or malformed.
struct ConfigError : Error {
    using Error::Error;
};

// An operation was called in a way its contract forbids.
struct UsageError : Error {
    using Error::Error;
};

// An iterate left the trusted numeric range; carries the offending step.
struct DivergenceError : Error {
    long long step;
    DivergenceError(const std::string& what, long long step_) : Error(what), step(step_) {}
};

// Filesystem / serialization failure.
struct IoError : Error {
    using Error::Error;
};

}  // namespace walab
