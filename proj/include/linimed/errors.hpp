#pragma once

#include <stdexcept>
#include <string>

namespace linimed {

// Bad tunables or environment parameters (non-positive lambda, d < 2, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Caller broke a precondition: dimension mismatch, empty arm set, ...
struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed ratings file; message carries the 1-based line number.
struct IngestionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace linimed
