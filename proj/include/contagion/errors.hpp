#pragma once

#include <stdexcept>
#include <string>

namespace contagion {

// Base class for everything thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed input text (bad date, unparsable number, duplicate rows).
class ParseError : public Error {
public:
    using Error::Error;
};

// Input violates a mathematical domain requirement (non-positive price,
// non-finite value, length mismatch).
class DomainError : public Error {
public:
    using Error::Error;
};

// Not enough observations to run the requested computation.
class InsufficientData : public Error {
public:
    using Error::Error;
};

// A required named column is absent or an input table has the wrong shape.
class SchemaError : public Error {
public:
    using Error::Error;
};

// A series is constant where variation is required (sd = 0).
class DegenerateSeries : public Error {
public:
    using Error::Error;
};

// Design or instrument matrix is rank deficient.
class SingularDesign : public Error {
public:
    using Error::Error;
};

// Fewer instruments than endogenous regressors.
class IdentificationError : public Error {
public:
    using Error::Error;
};

// A quantile regression fit left a residual sum of zero, so the
// log-ratio statistic is undefined for that pair.
class DegenerateFit : public Error {
public:
    using Error::Error;
};

// Over-identification test requested in a just-identified configuration.
class NotOveridentified : public Error {
public:
    using Error::Error;
};

// All structural coefficients are zero; shares cannot be normalized.
class UndefinedShares : public Error {
public:
    using Error::Error;
};

// Fewer than two method labels available for status classification.
class Unclassifiable : public Error {
public:
    using Error::Error;
};

// Bad pipeline or generator configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace contagion
