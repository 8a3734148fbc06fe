#pragma once

#include <stdexcept>
#include <string>

namespace isac {

// Bad dimensions, invalid parameter ranges, unknown identifiers.
struct ConfigError : std::invalid_argument {
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Structurally valid call with unusable data (zero-energy reference,
// degenerate geometry, out-of-range channel path).
struct InputError : std::invalid_argument {
    explicit InputError(const std::string& what) : std::invalid_argument(what) {}
};

// Runtime numerical failure (singular innovation covariance, diverging
// gradient iteration).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace isac
