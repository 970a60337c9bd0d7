#pragma once

#include <stdexcept>
#include <string>

namespace alis {

// Every failure raised by the library derives from Error so callers (the CLI
// in particular) can map categories onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
public:
    using Error::Error;
};

// Tensor/shape/group bookkeeping mismatch.
class ShapeError : public Error {
public:
    using Error::Error;
};

class UnsupportedError : public Error {
public:
    using Error::Error;
};

// Malformed .alsn file.
class FormatError : public Error {
public:
    using Error::Error;
};

// Weight map does not match what a config demands.
class LoadError : public Error {
public:
    using Error::Error;
};

// Unreadable or malformed user input (images, manifests, configs).
class InputError : public Error {
public:
    using Error::Error;
};

}  // namespace alis
