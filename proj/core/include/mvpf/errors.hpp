#pragma once

#include <stdexcept>
#include <string>

namespace mvpf {

// Violated precondition or broken invariant on a public surface.
class ContractError : public std::runtime_error {
public:
    explicit ContractError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/image/camera shapes that do not line up.
class DimensionError : public ContractError {
public:
    explicit DimensionError(const std::string& msg) : ContractError("dimension mismatch: " + msg) {}
};

// Least-squares fit with no unique solution (e.g. constant regressor).
class DegenerateFitError : public ContractError {
public:
    explicit DegenerateFitError(const std::string& msg) : ContractError("degenerate fit: " + msg) {}
};

class InsufficientDataError : public ContractError {
public:
    explicit InsufficientDataError(const std::string& msg) : ContractError("insufficient data: " + msg) {}
};

// Non-finite values appeared during iteration (optimizer or sampler).
class DivergenceError : public std::runtime_error {
public:
    explicit DivergenceError(const std::string& msg) : std::runtime_error("divergence: " + msg) {}
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

}  // namespace mvpf
