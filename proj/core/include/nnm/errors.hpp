#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nnm {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller-supplied value violates an operation's precondition.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A referenced node, session, fragment or file does not exist.
class NotFound : public Error {
public:
    using Error::Error;
};

/// Malformed configuration (prompt template, layout parameters, CLI flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// GML document could not be parsed; carries the 1-based line of the fault.
class GmlParseError : public Error {
public:
    GmlParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Script or document JSON does not match its schema.
class FormatError : public Error {
public:
    using Error::Error;
};

/// The generation or embedding service failed (transport, status, payload).
class BackendError : public Error {
public:
    using Error::Error;
};

/// The page-existence validator could not reach a verdict. Distinct from "invalid".
class ValidatorError : public Error {
public:
    using Error::Error;
};

/// Force computation produced a non-finite value.
class LayoutError : public Error {
public:
    using Error::Error;
};

} // namespace nnm
