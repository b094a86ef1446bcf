#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace missgraph {

// Process exit codes used by the CLI. Every library error maps onto one.
enum class ErrorCode : int {
    Config = 2,
    Parse = 3,
    Numeric = 4,
    Convergence = 5,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string kind, const std::string& message)
        : std::runtime_error(message), code_(code), kind_(std::move(kind)) {}

    ErrorCode code() const noexcept { return code_; }
    // Short machine-readable tag, e.g. "parse", "degenerate_column".
    const std::string& kind() const noexcept { return kind_; }
    // Pipeline stage that raised the error; empty outside the pipeline.
    const std::string& stage() const noexcept { return stage_; }
    void set_stage(std::string stage) { stage_ = std::move(stage); }

private:
    ErrorCode code_;
    std::string kind_;
    std::string stage_;
};

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error(ErrorCode::Parse, "parse", message) {}
};

class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& message) : Error(ErrorCode::Parse, "schema", message) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& message) : Error(ErrorCode::Config, "config", message) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& message) : Error(ErrorCode::Config, "usage", message) {}
};

// A numerical routine was called outside its documented domain.
class ContractError : public Error {
public:
    explicit ContractError(const std::string& message) : Error(ErrorCode::Numeric, "contract", message) {}
};

class DegenerateColumnError : public Error {
public:
    explicit DegenerateColumnError(const std::string& column)
        : Error(ErrorCode::Numeric, "degenerate_column", "column '" + column + "' is constant"),
          column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class UnimputableColumnError : public Error {
public:
    explicit UnimputableColumnError(const std::string& column)
        : Error(ErrorCode::Numeric, "unimputable_column",
                "column '" + column + "' has no observed entries to impute from"),
          column_(column) {}
    const std::string& column() const noexcept { return column_; }

private:
    std::string column_;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& message, double residual)
        : Error(ErrorCode::Convergence, "convergence", message), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

}  // namespace missgraph
