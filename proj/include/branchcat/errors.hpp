#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace branchcat {

// Error taxonomy. The CLI maps ConfigError to exit code 2 and every other
// branchcat exception (plus std::domain_error and friends) to exit code 1.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A requested moment of the fragmentation kernel or jump measure diverges.
struct InfiniteMomentError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Adaptive integration could not reach the requested tolerance.
struct QuadratureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Root bracketing or residual tolerance failed in a scalar solve.
struct NoRootError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Too few surviving paths to fit a decay curve.
struct TooFewSurvivorsError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ensemble snapshot empty: every path was absorbed before the snapshot time.
struct AllAbsorbedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A path state became NaN (or otherwise non-finite below the explosion
// threshold). Never repaired silently; the offending path index is attached.
struct NonFiniteStateError : std::runtime_error {
    std::uint64_t path_index;
    NonFiniteStateError(const std::string& msg, std::uint64_t idx)
        : std::runtime_error(msg + " (path_index=" + std::to_string(idx) + ")"),
          path_index(idx) {}
};

}  // namespace branchcat
