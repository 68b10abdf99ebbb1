#pragma once

#include <stdexcept>
#include <string>

namespace vistruct {

/// Base for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Input data or configuration failed validation. Maps to CLI exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

/// A backend ran out of retries. Maps to CLI exit code 2.
struct BackendExhausted : Error {
    BackendExhausted(const std::string& what, int attempts_made)
        : Error(what), attempts(attempts_made) {}
    int attempts = 0;
};

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int validation_failure = 1;
inline constexpr int backend_exhaustion = 2;
}  // namespace exit_code

}  // namespace vistruct
