#pragma once

#include <stdexcept>
#include <string>

namespace normest {

// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid problem parameterization (bad dimension, mixed integrability
// vector, q below the admissible range, ...).
class config_error : public error {
public:
    explicit config_error(const std::string& msg) : error(msg) {}
};

// A derived quantity is undefined for the given class parameters
// (e.g. tau(s*) <= 0 where a positive value is required).
class infeasible_error : public error {
public:
    explicit infeasible_error(const std::string& msg) : error(msg) {}
};

// Estimation requested with fewer than p observations.
class insufficient_sample_error : public error {
public:
    explicit insufficient_sample_error(const std::string& msg) : error(msg) {}
};

// Quadrature failed to reach the requested absolute tolerance.
class tolerance_error : public error {
public:
    explicit tolerance_error(const std::string& msg) : error(msg) {}
};

} // namespace normest
