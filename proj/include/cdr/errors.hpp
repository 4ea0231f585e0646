#pragma once

#include <stdexcept>
#include <string>

namespace cdr {

// Every library error carries the module and operation that raised it. The CLI
// maps ConfigError to exit code 1 and every other Error to exit code 2.
class Error : public std::runtime_error {
public:
    Error(std::string module, std::string operation, const std::string& detail)
        : std::runtime_error(module + "." + operation + ": " + detail),
          module_(std::move(module)),
          operation_(std::move(operation)) {}

    const std::string& module() const noexcept { return module_; }
    const std::string& operation() const noexcept { return operation_; }

private:
    std::string module_;
    std::string operation_;
};

/// A parameter violates its invariant; field() names the offending parameter.
class ValidationError : public Error {
public:
    ValidationError(std::string module, std::string operation, std::string field, const std::string& detail)
        : Error(std::move(module), std::move(operation), field + ": " + detail), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class DomainError : public Error {
    using Error::Error;
};

/// Time grid too coarse for the dynamics being integrated.
class ResolutionError : public Error {
    using Error::Error;
};

/// Sequences that must share a grid do not.
class ShapeError : public Error {
    using Error::Error;
};

class FitQualityError : public Error {
    using Error::Error;
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& detail)
        : Error("config", "parse", field + ": " + detail), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace cdr
