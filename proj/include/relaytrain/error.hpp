// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace relaytrain {

// Process exit codes used by the command line tool.
enum class ExitCode : int {
    ok = 0,
    config_error = 2,
    validation_failure = 3,
    numerical_failure = 4,
};

/// Malformed or inconsistent experiment configuration.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A numerical routine failed to reach its accuracy target, or produced a value
/// outside its mathematical range by more than roundoff.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw std::invalid_argument(message);
}

} // namespace detail
} // namespace relaytrain
