#pragma once

#include <stdexcept>
#include <string>

namespace strip {

/// Malformed input: bad parameters, unreadable config, violated preconditions.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed: non-convergence, singular factorization,
/// spectral parameter inside the spectrum, complex Ritz value.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace strip
