#pragma once

#include <stdexcept>
#include <string>

namespace eeplab {

// Invalid input. `field()` names the offending config path when known
// (e.g. "model.d"), otherwise it is empty.
class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(const std::string& what, std::string field = {})
        : std::invalid_argument(field.empty() ? what : field + ": " + what),
          field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class NotPositiveDefiniteError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnsupportedDimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Iterative solver (PSOR, Newton) failed to reach tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual)
        : std::runtime_error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Query outside the region a surface was solved on.
class ExtrapolationError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Finite-difference oracle asked to evaluate too close to a payoff kink.
class OracleInvalidError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Wraps a failure inside one stage of a multi-stage pipeline.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what)
        : std::runtime_error(stage + ": " + what), stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace eeplab
