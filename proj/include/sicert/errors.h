#pragma once

#include <stdexcept>

namespace sicert {

/// A parameter lies outside the documented domain of an operation.
struct InvalidParameter : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// The photon-number sum was cut off before the source's residual mass fell
/// under the configured tolerance.
struct TruncationInsufficient : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A fixed-width integer result would not fit its representation.
struct OverflowError : std::overflow_error {
    using std::overflow_error::overflow_error;
};

/// An enumeration oracle was asked for more work than its budget allows.
struct BudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A dual certificate did not pass independent re-verification.
struct VerificationFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A file could not be read or written; the message names the path.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sicert
