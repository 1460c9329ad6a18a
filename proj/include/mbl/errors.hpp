#pragma once

#include <stdexcept>
#include <string>

namespace mbl {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidParam : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

// Rejection sampling of near-orthogonal features ran out of resamplings.
class AttemptsExhausted : public Error {
public:
    using Error::Error;
};

// An SPD factorization failed (typically epsilon = 0 with a rank-deficient Gram).
class NumericalFailure : public Error {
public:
    using Error::Error;
};

class NoConvergence : public Error {
public:
    using Error::Error;
};

// The residual constraint excludes the whole unit ball; impossible when the
// declared misspecification level is honest.
class InfeasibleSet : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mbl
