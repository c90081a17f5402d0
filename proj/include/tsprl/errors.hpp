#pragma once

#include <stdexcept>
#include <string>

namespace tsprl {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A tour does not match its instance (wrong size or not a permutation).
struct InvalidTourError : Error {
    using Error::Error;
};

/// Malformed instance or config text; message names the offending line.
struct ParseError : Error {
    using Error::Error;
};

/// Input exceeds a hard size guard (e.g. exact solvers).
struct SizeLimitError : Error {
    using Error::Error;
};

/// A forbidden transition was requested or constraints are infeasible.
struct ConstraintError : Error {
    using Error::Error;
};

/// Non-finite value encountered in numeric code.
struct NumericError : Error {
    using Error::Error;
};

/// Matrix/vector dimensions do not line up.
struct ShapeError : Error {
    using Error::Error;
};

/// Out-of-range parameter (boost, epsilon, counts, ...).
struct ParameterError : Error {
    using Error::Error;
};

} // namespace tsprl
