#pragma once

#include <stdexcept>
#include <string>

namespace femlet {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text: mesh files, region selectors, term and equation strings.
class ParseError : public Error {
public:
    using Error::Error;
};

/// A caller-supplied argument violates an operation's precondition.
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// A facet or cell region selection matched nothing.
class EmptyRegionError : public Error {
public:
    using Error::Error;
};

/// Non-positive Jacobian determinant at a quadrature point.
class DegenerateCellError : public Error {
public:
    using Error::Error;
};

/// A name (variable, material, region, integral, field, solver) does not resolve.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// Linear solve hit a numerically zero pivot.
class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// Conjugate gradients met a direction with non-positive curvature.
class IndefiniteMatrixError : public Error {
public:
    using Error::Error;
};

/// Equations are mutually dependent and cannot be solved block by block.
class CyclicDependencyError : public Error {
public:
    using Error::Error;
};

/// Nonlinear solve did not converge where convergence was required.
class SolverError : public Error {
public:
    using Error::Error;
};

/// File could not be opened or written.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace femlet
