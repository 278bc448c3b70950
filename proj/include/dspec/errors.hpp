#pragma once

#include <stdexcept>
#include <string>

namespace dspec {

/// Bad caller-supplied parameters (window sizes, tolerances, zero vectors).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A sequence or derived object violates the standing assumptions
/// (singular A(n), bound exceeded, query outside a tabulated window).
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical post-processing could not produce a consistent result
/// (non-monotone gap ranks, projector drift, inconsistent certificates).
class ConsistencyError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace dspec
