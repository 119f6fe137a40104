#pragma once

#include <stdexcept>
#include <string>

namespace corrgraph {

// Error categories map 1:1 onto CLI exit codes (see tools/).
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad command-line usage: unknown enum value, invalid flag combination. Exit 2.
struct UsageError : Error {
    using Error::Error;
};

// Input violates an operation's contract (shape mismatch, missing class,
// incompatible dataset tags, unreadable path). Exit 3.
struct InputError : Error {
    using Error::Error;
};

// On-disk data is corrupt or not in the expected format. Exit 4.
struct DataError : Error {
    using Error::Error;
};

// An internal invariant broke. Exit 5.
struct InternalError : Error {
    using Error::Error;
};

struct BadMagic : DataError {
    using DataError::DataError;
};

struct Truncated : DataError {
    using DataError::DataError;
};

struct CorruptRecord : DataError {
    using DataError::DataError;
};

struct NonSquare : InputError {
    using InputError::InputError;
};

struct InsufficientClass : InputError {
    using InputError::InputError;
};

struct LagOutOfRange : InputError {
    using InputError::InputError;
};

struct DimMismatch : InputError {
    using InputError::InputError;
};

struct ShapeMismatch : InputError {
    using InputError::InputError;
};

struct ImageTooSmall : InputError {
    using InputError::InputError;
};

struct EmptyDataset : InputError {
    using InputError::InputError;
};

struct TagMismatch : InputError {
    using InputError::InputError;
};

struct TooLarge : InputError {
    using InputError::InputError;
};

struct IoFailure : Error {
    using Error::Error;
};

} // namespace corrgraph
