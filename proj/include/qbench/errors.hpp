#pragma once

#include <stdexcept>
#include <string>

namespace qbench {

/// Invalid configuration value (qubit count, encoding, hyperparameter).
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

/// Caller violated an operation's precondition (bad index, dimension mismatch).
class UsageError : public std::invalid_argument {
public:
    explicit UsageError(const std::string& what) : std::invalid_argument(what) {}
};

/// Malformed or missing input data.
class IngestionError : public std::runtime_error {
public:
    explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

/// Optimisation blew up (NaN loss, divergence).
class TrainingError : public std::runtime_error {
public:
    explicit TrainingError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qbench
