#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace nvmag {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (e.g. a non-unit axis).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Inputs are valid but fall outside the physical model (e.g. f1 <= 0).
class OutOfModelError : public Error {
public:
    using Error::Error;
};

/// Malformed or insufficient input data (length mismatch, too few frames).
class InputError : public Error {
public:
    using Error::Error;
};

class CalibrationError : public Error {
public:
    using Error::Error;
};

class StepSizeError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line, int column);

    int line() const noexcept { return line_; }
    int column() const noexcept { return column_; }

private:
    int line_;
    int column_;
};

/// Soft diagnostics (overlapping DR lines, large-signal operation) go through
/// this hook. The default handler prints to stderr.
using WarningHandler = std::function<void(std::string_view)>;

WarningHandler set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace nvmag
