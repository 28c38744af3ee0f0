#pragma once

#include <stdexcept>
#include <string>

namespace rppg {

// Error taxonomy surfaced by the CLI as one-line "category: message" output.
// std::invalid_argument is used directly for precondition violations.

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrackingError : std::runtime_error {
    TrackingError(const std::string& msg, int64_t frame)
        : std::runtime_error(msg), frame(frame) {}
    int64_t frame;
};

struct NoSignalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DivergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Short machine-parsable category token for an exception.
inline const char* error_category(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return "config-error";
    if (dynamic_cast<const IoError*>(&e)) return "io-error";
    if (dynamic_cast<const TrackingError*>(&e)) return "tracking-failure";
    if (dynamic_cast<const NoSignalError*>(&e)) return "no-signal";
    if (dynamic_cast<const ConvergenceError*>(&e)) return "convergence-error";
    if (dynamic_cast<const DivergenceError*>(&e)) return "divergence";
    if (dynamic_cast<const std::invalid_argument*>(&e)) return "invalid-argument";
    return "error";
}

}  // namespace rppg
