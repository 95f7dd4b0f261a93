#pragma once

#include <stdexcept>

namespace tabdistill {

// Shape contract violation (matmul inner dims, operand mismatch, slot shapes).
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A numerical routine could not proceed (non-PD pivot, NaN loss, divergence).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A documented precondition on the inputs was not met.
class ContractError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Invalid user configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace tabdistill
