#pragma once

#include <stdexcept>
#include <string>

namespace flipchain {

/// Invalid user input: malformed config, missing keys, out-of-range plan
/// parameters. Maps to its own process exit code in the CLI.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// A physical constraint failed: nonpositive temperature, covariance not
/// PSD, conservation drift. Distinct from a verification check merely
/// exceeding its tolerance.
struct PhysicsError : std::runtime_error {
    explicit PhysicsError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace flipchain
