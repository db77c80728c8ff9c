#pragma once

#include <stdexcept>
#include <string>

namespace sca {

// Error taxonomy shared by the library and the CLI exit-code contract:
// contract_error / format_error -> exit 1, singular_error / numeric_error -> exit 2.

/// Violated precondition: bad shapes, out-of-range parameters, degenerate inputs.
struct contract_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Malformed, truncated, or inconsistent files.
struct format_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Rank deficiency where an inverse (or near-inverse) is required.
struct singular_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Non-finite values or an iteration that failed to converge.
struct numeric_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace sca
