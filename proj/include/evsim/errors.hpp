#pragma once

#include <stdexcept>
#include <string>

namespace evsim {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A value failed its domain invariant at construction.
class InvalidValue : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

// Provider output did not parse or violated the response contract.
class SchemaError : public Error {
public:
    using Error::Error;
};

// Transport or endpoint failure talking to a provider.
class ProviderError : public Error {
public:
    using Error::Error;
};

class StrandedError : public Error {
public:
    StrandedError(std::string agent_id, double required_kwh, double available_kwh);

    const std::string& agent_id() const { return agent_id_; }
    double required_kwh() const { return required_kwh_; }
    double available_kwh() const { return available_kwh_; }

private:
    std::string agent_id_;
    double required_kwh_;
    double available_kwh_;
};

class ZeroChargeError : public Error {
public:
    using Error::Error;
};

class OutOfOrderError : public Error {
public:
    using Error::Error;
};

// Missing or unreadable run artifacts.
class ArtifactError : public Error {
public:
    using Error::Error;
};

} // namespace evsim
