#pragma once

#include <stdexcept>
#include <string>

namespace clickguard {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a documented precondition (bad rank, delta <= 0, ...).
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data could not be parsed or is inconsistent with its schema.
class DataError : public Error {
public:
    using Error::Error;
};

/// Two matrices that must conform do not.
class DimensionMismatch : public InvalidArgument {
public:
    using InvalidArgument::InvalidArgument;
};

}  // namespace clickguard
