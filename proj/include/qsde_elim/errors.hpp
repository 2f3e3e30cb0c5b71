// errors.hpp: Exception types shared by all modules

#pragma once

#include <stdexcept>
#include <string>

namespace qsde_elim {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shapes that do not fit together.
struct DimensionError : Error {
    using Error::Error;
};

// Argument outside its documented domain.
struct ParameterError : Error {
    using Error::Error;
};

// Size cap exceeded (Kronecker products, enumeration, integration order).
struct CapacityError : Error {
    using Error::Error;
};

struct SingularityError : Error {
    SingularityError(const std::string& what, double cond)
        : Error(what + " (condition estimate " + std::to_string(cond) + ")"), condition(cond) {}
    double condition;
};

// Model fails the hypotheses an operation needs (e.g. ||E11|| >= gamma/2).
struct PreconditionError : Error {
    using Error::Error;
};

// Observation time sits on a discontinuity where one-sided limits disagree.
struct AmbiguityError : Error {
    using Error::Error;
};

struct DivergenceError : Error {
    using Error::Error;
};

// ODE integration could not meet its tolerance.
struct AccuracyError : Error {
    using Error::Error;
};

struct NumericError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

}  // namespace qsde_elim
