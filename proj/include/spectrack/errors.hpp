#pragma once

#include <stdexcept>
#include <string>

namespace spectrack {

// Base class for everything thrown by this library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad arguments, shape mismatches, out-of-range parameters. CLI exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem and serialization failures. CLI exit code 2.
struct IoError : Error {
    using Error::Error;
};

// Malformed file content; `field` names the offending header field or key.
struct FormatError : IoError {
    FormatError(std::string field_name, const std::string& message)
        : IoError(message), field(std::move(field_name)) {}
    std::string field;
};

// Numeric failures. CLI exit code 3.
struct NumericError : Error {
    using Error::Error;
};

// A (near-)zero norm where a direction was expected: the spectral signal died.
struct SpectralCollapseError : NumericError {
    using NumericError::NumericError;
};

// Training produced a non-finite loss; `epoch` is where it happened.
struct DivergenceError : NumericError {
    DivergenceError(int at_epoch, const std::string& message)
        : NumericError(message), epoch(at_epoch) {}
    int epoch;
};

}  // namespace spectrack
