#pragma once

#include <stdexcept>
#include <string>

namespace dae {

/// Violated precondition (bad argument, invalid hyperparameter).
class ContractError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Operand shapes do not compose.
class DimensionError : public ContractError {
public:
    using ContractError::ContractError;
};

/// A NaN/Inf appeared in an input or intermediate.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Misuse of a computation record (unknown node, non-scalar loss).
class GraphError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Invalid experiment or stage configuration. `field()` names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& message)
        : std::runtime_error(field.empty() ? message : field + ": " + message),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the regime where a formula applies.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

}  // namespace dae
