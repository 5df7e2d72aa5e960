#pragma once

#include <stdexcept>
#include <string>

namespace cof {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Incompatible matrix/tensor dimensions.
struct ShapeError : Error {
    using Error::Error;
};

// The caller violated an API contract (bad arguments, wrong call order).
struct UsageError : Error {
    using Error::Error;
};

// Input files or records are malformed or inconsistent.
struct DataError : Error {
    using Error::Error;
};

// Binary file magic/version/layout mismatch.
struct FormatError : DataError {
    using DataError::DataError;
};

}  // namespace cof
