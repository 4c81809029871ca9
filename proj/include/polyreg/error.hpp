#pragma once

#include <stdexcept>
#include <string>

namespace polyreg {

// Base for every error raised by the library. The CLI maps InputError to
// exit code 2 and NumericalError to exit code 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

// Fewer than two points: the N(N-1) normalization is undefined.
class InsufficientDataError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

// Sum of weights is zero.
class DegenerateWeightsError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

class ConditioningError : public NumericalError {
public:
    ConditioningError(const std::string& what, double conditionEstimate)
        : NumericalError(what), conditionEstimate_(conditionEstimate) {}

    double conditionEstimate() const noexcept { return conditionEstimate_; }

private:
    double conditionEstimate_;
};

// Raised by the splitter when the region has no spread along any axis.
class NoSplitError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

}  // namespace polyreg
