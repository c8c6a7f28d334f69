#pragma once

#include <stdexcept>
#include <string>

namespace gridlearn {

/// Base class for all gridlearn error conditions.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Network description violates a structural invariant (bad bus index,
/// nonpositive reactance, generator mapped to a nonexistent bus, ...).
class InvalidTopologyError : public Error {
public:
    using Error::Error;
};

/// Reduced susceptance matrix is singular (disconnected network).
class SingularNetworkError : public Error {
public:
    using Error::Error;
};

/// LP has no strictly feasible point. Carries the phase-I certificate:
/// the smallest achievable worst-case constraint violation.
class InfeasibleError : public Error {
public:
    InfeasibleError(const std::string& what, double certificate_residual)
        : Error(what), certificate_residual(certificate_residual) {}
    double certificate_residual;
};

/// Newton iteration did not reach the requested residual within the cap.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double dual_residual, double primal_residual)
        : Error(what), dual_residual(dual_residual), primal_residual(primal_residual) {}
    double dual_residual;
    double primal_residual;
};

/// KKT system singular at the solution; caller may raise mu and retry.
class DegenerateSensitivityError : public Error {
public:
    using Error::Error;
};

/// Dataset / fixture / CSV parsing failure.
class DataError : public Error {
public:
    using Error::Error;
};

/// Run-configuration failure (missing key, bad value, bad split spec).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Training stopped: non-finite gradient or too many skipped instances.
class TrainingAbortError : public Error {
public:
    using Error::Error;
};

}  // namespace gridlearn
