#pragma once

#include <stdexcept>
#include <string>

namespace aesc {

// Base of every error raised by the library. The CLI maps the subclasses onto
// its exit codes (usage 1, data 2, divergence 3).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

} // namespace aesc
