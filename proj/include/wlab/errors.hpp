#pragma once

#include <stdexcept>
#include <string>

namespace wlab {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Operand shapes are incompatible with the requested operation.
struct ShapeError : Error {
    using Error::Error;
};

// An argument is out of its documented domain.
struct ValueError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

// File header is missing, malformed, or inconsistent with the payload.
struct HeaderError : IoError {
    using IoError::IoError;
};

// File ends before the payload announced by its header.
struct TruncatedError : IoError {
    using IoError::IoError;
};

// Checkpoint/model architecture disagreement on resume.
struct SpecMismatchError : Error {
    using Error::Error;
};

// Training produced a non-finite objective; message carries the step and
// term breakdown.
struct NumericError : Error {
    using Error::Error;
};

}  // namespace wlab
