#pragma once

#include <stdexcept>
#include <string>

namespace freeknot {

/// Base class for all library errors.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Knot vector has too few entries for the requested operation.
class arity_error : public error {
public:
    using error::error;
};

/// Argument outside the admissible interval.
class range_error : public error {
public:
    using error::error;
};

/// Requested computation is not supported for the given configuration
/// (missing derivative order, unsupported degree/problem combination, ...).
class capability_error : public error {
public:
    using error::error;
};

/// The requested value is a distribution (Dirac mass), not a function;
/// pointwise evaluation is refused.
class distributional_error : public error {
public:
    using error::error;
};

/// Derivative order outside the range where pointwise values exist.
class order_error : public error {
public:
    using error::error;
};

/// A form derivative was requested in a configuration where the map is
/// not differentiable (piecewise-constant factors on crossing knot vectors).
class nondifferentiable_error : public error {
public:
    using error::error;
};

/// Constraint system cannot be satisfied.
class infeasible_error : public error {
public:
    using error::error;
};

/// Euclidean projection failed to produce a feasible point.
class projection_error : public error {
public:
    using error::error;
};

/// Iterative solver produced non-finite values.
class divergence_error : public error {
public:
    using error::error;
};

/// Malformed file or configuration input.
class io_error : public error {
public:
    using error::error;
};

} // namespace freeknot
