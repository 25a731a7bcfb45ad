#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace langchange {

// ============================================================================
// Error hierarchy. InputError subclasses map to CLI exit code 2, NumericalError
// subclasses to exit code 1.
// ============================================================================

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Malformed text input; carries the 1-based line number.
class ParseError : public InputError {
public:
    ParseError(const std::string& source, std::size_t line, const std::string& what)
        : InputError(source + ":" + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

// Well-formed but semantically invalid input (unknown stage symbol etc.).
class ValidationError : public InputError {
public:
    using InputError::InputError;
};

// Argument outside an operation's domain.
class DomainError : public InputError {
public:
    using InputError::InputError;
};

// Missing/inconsistent configuration (reference region absent, missing file).
class ConfigError : public InputError {
public:
    using InputError::InputError;
};

// Name lookup failure (unknown region, language).
class LookupError : public InputError {
public:
    using InputError::InputError;
};

// Least-squares system underdetermined, optimiser failure.
class FitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace langchange
