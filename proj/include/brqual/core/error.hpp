#pragma once

#include <stdexcept>
#include <string>

namespace brqual {

// Every failure raised by the library derives from Error so the CLI can map
// whole families onto exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- provider / transport ---------------------------------------------------

class ProviderError : public Error {
public:
    using Error::Error;
};

class CacheMiss : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class TransportError : public ProviderError {
public:
    explicit TransportError(const std::string& what, bool retryable = true)
        : ProviderError(what), retryable_(retryable) {}
    bool retryable() const noexcept { return retryable_; }

private:
    bool retryable_;
};

class RateLimited : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class AuthError : public ProviderError {
public:
    using ProviderError::ProviderError;
};

class DimensionMismatch : public ProviderError {
public:
    using ProviderError::ProviderError;
};

// --- data / parsing ---------------------------------------------------------

class SchemaError : public Error {
public:
    using Error::Error;
};

class MalformedCompletion : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Input artifact for a stage is missing or unreadable.
class ArtifactError : public Error {
public:
    using Error::Error;
};

// --- named operation failures -------------------------------------------------

#define BRQUAL_DEFINE_ERROR(Name, Base) \
    class Name : public Base {          \
    public:                             \
        using Base::Base;               \
    };

BRQUAL_DEFINE_ERROR(EmptyPopulation, Error)
BRQUAL_DEFINE_ERROR(InsufficientData, Error)
BRQUAL_DEFINE_ERROR(DegenerateLabels, Error)
BRQUAL_DEFINE_ERROR(CatalogMissing, ConfigError)
BRQUAL_DEFINE_ERROR(SlotOverflow, Error)
BRQUAL_DEFINE_ERROR(UnparseableOutput, Error)
BRQUAL_DEFINE_ERROR(TooFewPairs, Error)
BRQUAL_DEFINE_ERROR(LengthMismatch, Error)
BRQUAL_DEFINE_ERROR(UnpairedAnnotation, Error)
BRQUAL_DEFINE_ERROR(EmptyTable, Error)
BRQUAL_DEFINE_ERROR(EmptyDocument, Error)

#undef BRQUAL_DEFINE_ERROR

}  // namespace brqual
