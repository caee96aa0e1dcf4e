#pragma once

#include <stdexcept>
#include <string>

namespace codyad {

/// Base for all engine errors; `module()` names the component that raised it.
class Error : public std::runtime_error {
public:
    Error(std::string module, const std::string& what)
        : std::runtime_error(what), module_(std::move(module)) {}
    const std::string& module() const noexcept { return module_; }

private:
    std::string module_;
};

/// Inputs outside an operation's domain (bad coordinates, length mismatch, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Factorization failure, underflow of all masses, and similar.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

}  // namespace codyad
