#include "mipll/linalg.hpp"

#include <algorithm>

namespace mipll {

Vec project_to_simplex(const Vec& v) {
    const int n = static_cast<int>(v.size());
    Vec u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double css = 0.0, theta = 0.0;
    int rho = 0;
    double running = 0.0;
    for (int i = 0; i < n; ++i) {
        running += u[i];
        double t = (running - 1.0) / (i + 1);
        if (u[i] - t > 0.0) {
            rho = i + 1;
            css = running;
        }
    }
    theta = (css - 1.0) / rho;
    Vec out(n);
    for (int i = 0; i < n; ++i) out[i] = std::max(v[i] - theta, 0.0);
    return out;
}

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidLabel: return "InvalidLabel";
        case ErrorCode::InvalidPartialLabel: return "InvalidPartialLabel";
        case ErrorCode::EmptyInput: return "EmptyInput";
        case ErrorCode::PreimageTooLarge: return "PreimageTooLarge";
        case ErrorCode::UnsupportedArity: return "UnsupportedArity";
        case ErrorCode::ShapeError: return "ShapeError";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidImbalance: return "InvalidImbalance";
        case ErrorCode::FeatureDimTooSmall: return "FeatureDimTooSmall";
        case ErrorCode::InvalidRegime: return "InvalidRegime";
        case ErrorCode::NotSolved: return "NotSolved";
        case ErrorCode::NumericalFailure: return "NumericalFailure";
        case ErrorCode::SolverFailed: return "SolverFailed";
        case ErrorCode::InfeasibleRisk: return "InfeasibleRisk";
    }
    return "UnknownError";
}

bool is_solver_failure(ErrorCode code) {
    switch (code) {
        case ErrorCode::NumericalFailure:
        case ErrorCode::SolverFailed:
        case ErrorCode::InfeasibleRisk:
        case ErrorCode::NotSolved:
            return true;
        default:
            return false;
    }
}

}  // namespace mipll
