#pragma once

#include <stdexcept>
#include <string>

namespace bcpflood {

// Root of every error raised by the library. The CLI maps the concrete
// subclasses onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller broke a documented precondition (mismatched lengths, empty inputs).
class ContractError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

// W + B*lambda <= 0 reached a variance-ratio integral.
class DegenerateVarianceError : public Error {
public:
    using Error::Error;
};

class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// Problem size exceeds what an exhaustive routine supports.
class SizeError : public Error {
public:
    using Error::Error;
};

// Tuning parameter outside its documented grid or range.
class ParameterError : public Error {
public:
    using Error::Error;
};

class GeometryError : public Error {
public:
    using Error::Error;
};

class ManifestError : public Error {
public:
    using Error::Error;
};

// Invalid synthetic-scene description.
class SpecError : public Error {
public:
    using Error::Error;
};

// Requested input (file, channel) is missing or unreadable.
class InputError : public Error {
public:
    using Error::Error;
};

class DegenerateHistogramError : public Error {
public:
    using Error::Error;
};

}  // namespace bcpflood
