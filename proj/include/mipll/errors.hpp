#pragma once

#include <stdexcept>
#include <string>

namespace mipll {

enum class ErrorCode {
    InvalidLabel,
    InvalidPartialLabel,
    EmptyInput,
    PreimageTooLarge,
    UnsupportedArity,
    ShapeError,
    InvalidArgument,
    InvalidImbalance,
    FeatureDimTooSmall,
    InvalidRegime,
    NotSolved,
    NumericalFailure,
    SolverFailed,
    InfeasibleRisk,
};

const char* error_code_name(ErrorCode code);

// True for failures of an iterative solver (as opposed to bad input).
bool is_solver_failure(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }
    const char* code_name() const { return error_code_name(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
    if (!condition) fail(code, message);
}

}  // namespace mipll
