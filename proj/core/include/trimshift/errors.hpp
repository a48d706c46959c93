#pragma once

#include <stdexcept>
#include <string>

namespace trimshift {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define TRIMSHIFT_DEFINE_ERROR(NAME)            \
    class NAME : public Error {                 \
    public:                                     \
        using Error::Error;                     \
    }

TRIMSHIFT_DEFINE_ERROR(InvalidMatrixError);      // malformed / reducible / periodic transition matrix
TRIMSHIFT_DEFINE_ERROR(InvalidSymbolError);      // symbol outside the alphabet
TRIMSHIFT_DEFINE_ERROR(InsufficientPrefixError); // stored prefix too short to decide
TRIMSHIFT_DEFINE_ERROR(InvalidMeasureError);     // stochastic matrix inconsistent with the system
TRIMSHIFT_DEFINE_ERROR(ConvergenceError);        // iterative solver exceeded its budget
TRIMSHIFT_DEFINE_ERROR(CapExceededError);        // observable lookahead cap hit
TRIMSHIFT_DEFINE_ERROR(NonIntegrableError);      // moment requested at an infinite level
TRIMSHIFT_DEFINE_ERROR(DomainError);             // argument outside the documented domain
TRIMSHIFT_DEFINE_ERROR(ScheduleInfeasibleError); // trimming/threshold schedule leaves (0,1)
TRIMSHIFT_DEFINE_ERROR(ConjugateDivergedError);  // de Bruijn fixed point did not settle
TRIMSHIFT_DEFINE_ERROR(ResourceError);           // enumeration / depth limits exceeded
TRIMSHIFT_DEFINE_ERROR(GapViolationError);       // second eigenvalue too close to one
TRIMSHIFT_DEFINE_ERROR(UnsupportedObservableError);
TRIMSHIFT_DEFINE_ERROR(ConfigError);             // config parse or cross-validation failure

#undef TRIMSHIFT_DEFINE_ERROR

} // namespace trimshift
