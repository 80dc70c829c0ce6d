#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mmtrack {

enum class ErrorCode : int {
    invalid_argument = 1,
    control_not_in_set,
    singular_innovation,
    non_finite_value,
    precondition_violated,
    invalid_horizon,
    tree_too_large,
    node_budget_exceeded,
    size_overflow,
    no_policy,
    // scenario / sweep documents
    io_error = 20,
    parse_error,
    missing_field,
    wrong_type,
    unsupported_schema,
    non_psd_covariance,
    asymmetric_matrix,
    nonpositive_range,
    nonpositive_ceiling,
    negative_variance,
    invalid_candidate_count,
    unknown_mode,
    empty_control_set,
    negative_epsilon,
    invalid_step_size,
    invalid_grid_resolution,
    invalid_sweep,
    unknown_field,
    non_finite_input,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::control_not_in_set: return "control_not_in_set";
        case ErrorCode::singular_innovation: return "singular_innovation";
        case ErrorCode::non_finite_value: return "non_finite_value";
        case ErrorCode::precondition_violated: return "precondition_violated";
        case ErrorCode::invalid_horizon: return "invalid_horizon";
        case ErrorCode::tree_too_large: return "tree_too_large";
        case ErrorCode::node_budget_exceeded: return "node_budget_exceeded";
        case ErrorCode::size_overflow: return "size_overflow";
        case ErrorCode::no_policy: return "no_policy";
        case ErrorCode::io_error: return "io_error";
        case ErrorCode::parse_error: return "parse_error";
        case ErrorCode::missing_field: return "missing_field";
        case ErrorCode::wrong_type: return "wrong_type";
        case ErrorCode::unsupported_schema: return "unsupported_schema";
        case ErrorCode::non_psd_covariance: return "non_psd_covariance";
        case ErrorCode::asymmetric_matrix: return "asymmetric_matrix";
        case ErrorCode::nonpositive_range: return "nonpositive_range";
        case ErrorCode::nonpositive_ceiling: return "nonpositive_ceiling";
        case ErrorCode::negative_variance: return "negative_variance";
        case ErrorCode::invalid_candidate_count: return "invalid_candidate_count";
        case ErrorCode::unknown_mode: return "unknown_mode";
        case ErrorCode::empty_control_set: return "empty_control_set";
        case ErrorCode::negative_epsilon: return "negative_epsilon";
        case ErrorCode::invalid_step_size: return "invalid_step_size";
        case ErrorCode::invalid_grid_resolution: return "invalid_grid_resolution";
        case ErrorCode::invalid_sweep: return "invalid_sweep";
        case ErrorCode::unknown_field: return "unknown_field";
        case ErrorCode::non_finite_input: return "non_finite_input";
    }
    return "unknown";
}

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mmtrack
