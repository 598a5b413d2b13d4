#pragma once

#include <stdexcept>
#include <string>

namespace profreg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A distribution or model parameter is outside its admissible domain.
class ParameterDomainError : public Error {
public:
    using Error::Error;
};

/// Cholesky factorisation failed for a matrix that must be SPD.
class NotPositiveDefiniteError : public Error {
public:
    using Error::Error;
};

/// The stick sequence is too short to certify the slice bound.
class InsufficientSticksError : public Error {
public:
    using Error::Error;
};

/// Input data violates a dataset invariant; message carries the location.
class DataError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// Raised from inside a sweep; message carries the sweep index and step label.
class SamplerError : public Error {
public:
    using Error::Error;
};

}  // namespace profreg
