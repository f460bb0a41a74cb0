#pragma once

#include <stdexcept>
#include <string>

namespace crit {

/// Bad input: violated precondition, malformed config, out-of-range parameter.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The operation needs a bounded density with mass near the top of [0,1]
/// (no atoms, finite sup, positive mass on [1-1/b, 1]) and did not get one.
class NotFlatError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// An iterative solver ran out of iterations. Carries the last diagnostics.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double last_change, int iterations)
        : std::runtime_error(what), last_change_(last_change), iterations_(iterations) {}

    [[nodiscard]] double last_change() const { return last_change_; }
    [[nodiscard]] int iterations() const { return iterations_; }

private:
    double last_change_;
    int iterations_;
};

}  // namespace crit
