#pragma once

#include <stdexcept>
#include <string>

namespace psl {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Caller passed arguments that violate a documented precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// Input data (CSV rows, labels, pair files, model documents) is malformed.
class DataError : public Error {
public:
    using Error::Error;
};

/// A lookup by name or id failed.
class NotFound : public Error {
public:
    using Error::Error;
};

/// Operation is not allowed in the current state (e.g. answering a stopped session).
class Conflict : public Error {
public:
    using Error::Error;
};

}  // namespace psl
