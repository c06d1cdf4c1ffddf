#pragma once

#include <stdexcept>
#include <string>

namespace ppstitch {

/// Base class of all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed or out-of-contract input data (CLI exit code 3).
struct DataError : Error {
    using Error::Error;
};

/// Numerical failure while solving or warping (CLI exit code 4).
struct NumericError : Error {
    using Error::Error;
};

struct TooFewCorrespondences : DataError {
    using DataError::DataError;
};

struct NonFiniteInput : DataError {
    using DataError::DataError;
};

struct ParseError : DataError {
    using DataError::DataError;
};

struct BoundsError : DataError {
    using DataError::DataError;
};

struct IoError : DataError {
    using DataError::DataError;
};

struct UnsupportedFormat : DataError {
    using DataError::DataError;
};

struct InvalidGrid : DataError {
    using DataError::DataError;
};

struct InvalidSpec : DataError {
    using DataError::DataError;
};

struct EmptyInput : DataError {
    using DataError::DataError;
};

struct DimensionMismatch : DataError {
    using DataError::DataError;
};

struct NoStructureFound : DataError {
    using DataError::DataError;
};

struct DegenerateConfiguration : NumericError {
    using NumericError::NumericError;
};

struct AtInfinity : NumericError {
    using NumericError::NumericError;
};

struct DegenerateAxis : NumericError {
    using NumericError::NumericError;
};

struct SingularBlend : NumericError {
    using NumericError::NumericError;
};

struct UnboundedCanvas : NumericError {
    using NumericError::NumericError;
};

}  // namespace ppstitch
