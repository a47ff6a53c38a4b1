// errors.hpp -- exception taxonomy shared by all modules.
#pragma once

#include <stdexcept>
#include <string>

namespace stablehomog {

// Bad mathematical inputs: alpha out of (0,2), empty boxes, mismatched grids.
struct domain_error : std::invalid_argument {
    explicit domain_error(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad user-supplied configuration: unknown JSON keys, unparsable law strings,
// inconsistent sweep parameters.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Requested computation would exceed hard resource limits (dense assembly
// beyond the cap, kernel tables beyond memory bounds).
struct resource_error : std::runtime_error {
    explicit resource_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Iterative solves that fail to converge or detect an inconsistent system.
struct solver_error : std::runtime_error {
    explicit solver_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Quadrature / reference evaluation could not meet the requested tolerance.
// Carries the achieved estimate so callers can decide whether to proceed.
struct accuracy_error : std::runtime_error {
    double estimate;
    accuracy_error(const std::string& msg, double est)
        : std::runtime_error(msg), estimate(est) {}
};

}  // namespace stablehomog
