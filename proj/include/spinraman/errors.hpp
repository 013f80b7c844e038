#pragma once

#include <stdexcept>
#include <string>

namespace spinraman {

// Configuration / usage problems: bad keys, type mismatches, violated
// parameter invariants. CLI maps these to exit code 1.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Physics-level failures: non-unique steady state, Fock truncation guard,
// stiffness, undefined observables. CLI maps these to exit code 2.
class PhysicsError : public std::runtime_error {
public:
    explicit PhysicsError(const std::string& what) : std::runtime_error(what) {}
};

class CalibrationError : public PhysicsError {
public:
    explicit CalibrationError(const std::string& what) : PhysicsError(what) {}
};

class NonUniqueSteadyStateError : public PhysicsError {
public:
    explicit NonUniqueSteadyStateError(const std::string& what) : PhysicsError(what) {}
};

// Lindblad-vs-perturbative disagreement beyond tolerance. Exit code 3.
class OracleMismatchError : public std::runtime_error {
public:
    explicit OracleMismatchError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace spinraman
