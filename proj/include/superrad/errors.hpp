#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace superrad {

// Base of every error raised by the library. `kind()` is a stable,
// machine-readable tag used by the CLI error JSON.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& what)
        : std::runtime_error(what), kind_(std::move(kind)) {}
    const std::string& kind() const noexcept { return kind_; }

private:
    std::string kind_;
};

class ParamError : public Error {
public:
    ParamError(std::string field, const std::string& what)
        : Error("invalid_parameter", what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class UndefinedRateError : public Error {
public:
    explicit UndefinedRateError(const std::string& what) : Error("undefined_rate", what) {}
};

class PoleError : public Error {
public:
    PoleError(double pole_time, const std::string& what)
        : Error("pole", what), pole_time_(pole_time) {}
    double pole_time() const noexcept { return pole_time_; }

private:
    double pole_time_;
};

class ImaginaryResidueError : public Error {
public:
    explicit ImaginaryResidueError(const std::string& what) : Error("imaginary_residue", what) {}
};

class DegenerateParametersError : public Error {
public:
    DegenerateParametersError(double critical_lambda_sq_over_gamma0_sq, const std::string& what)
        : Error("degenerate_parameters", what), critical_(critical_lambda_sq_over_gamma0_sq) {}
    double critical_lambda_sq_over_gamma0_sq() const noexcept { return critical_; }

private:
    double critical_;
};

class InvariantError : public Error {
public:
    explicit InvariantError(const std::string& what) : Error("invariant_violation", what) {}
};

class CapacityError : public Error {
public:
    CapacityError(std::size_t required_bytes, std::size_t budget_bytes, const std::string& what)
        : Error("capacity", what), required_(required_bytes), budget_(budget_bytes) {}
    std::size_t required_bytes() const noexcept { return required_; }
    std::size_t budget_bytes() const noexcept { return budget_; }

private:
    std::size_t required_;
    std::size_t budget_;
};

class StiffnessError : public Error {
public:
    explicit StiffnessError(const std::string& what) : Error("step_underflow", what) {}
};

class AccuracyError : public Error {
public:
    explicit AccuracyError(const std::string& what) : Error("trace_drift", what) {}
};

class IncompleteTraceError : public Error {
public:
    explicit IncompleteTraceError(const std::string& what) : Error("incomplete_trace", what) {}
};

class BracketError : public Error {
public:
    explicit BracketError(const std::string& what) : Error("bracket", what) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error("data", what) {}
};

class ConfigError : public Error {
public:
    ConfigError(std::string field, int line, const std::string& what)
        : Error("config", what), field_(std::move(field)), line_(line) {}
    const std::string& field() const noexcept { return field_; }
    // 0 when the error did not come from a config file line.
    int line() const noexcept { return line_; }

private:
    std::string field_;
    int line_;
};

}  // namespace superrad
