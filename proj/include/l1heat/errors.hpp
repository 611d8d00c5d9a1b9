#pragma once

#include <stdexcept>
#include <string>

namespace l1heat {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed text input (mesh files, CLI specs).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Structurally invalid input: bad indices, degenerate or nonconforming meshes,
/// out-of-range parameters.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Solver breakdown: CG non-convergence, NaN, singular or non-SPD matrices.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Adaptive quadrature hit its depth limit in strict mode.
class QuadratureError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// Reverse CFL condition violated under the enforce policy.
class CflViolation : public Error {
public:
    using Error::Error;
};

/// Problem exceeds a desk-scale size cap (dense space-time forms).
class SizeLimitError : public Error {
public:
    using Error::Error;
};

} // namespace l1heat
