#pragma once

#include <stdexcept>
#include <string>

namespace fbflow {

/// Violated precondition on arguments (mismatched grids, eps <= 0, p <= 1, ...).
struct ContractError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Out-of-range cell or node index.
struct IndexError : std::out_of_range {
    using std::out_of_range::out_of_range;
};

/// Input that is well-typed but does not satisfy a documented precondition
/// (nonzero boundary values for Poincare, ball leaving the grid, ...).
struct PreconditionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Floating-point breakdown: NaN in a line search, bisection that fails to bracket.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace fbflow
