// Error taxonomy shared by all tbq modules. Each error carries a stable
// machine-readable code string that the CLI surfaces as JSON.

#pragma once

#include <stdexcept>
#include <string>

namespace tbq {

enum class ErrorCode {
    invalid_mode,
    grid_mismatch,
    invalid_routing,
    degenerate_routing,
    unsupported_dimension,
    index_out_of_range,
    insufficient_data,
    domain_error,
    shape_error,
    config_error,
    complexity_error,
    io_error,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::invalid_mode: return "invalid_mode";
        case ErrorCode::grid_mismatch: return "grid_mismatch";
        case ErrorCode::invalid_routing: return "invalid_routing";
        case ErrorCode::degenerate_routing: return "degenerate_routing";
        case ErrorCode::unsupported_dimension: return "unsupported_dimension";
        case ErrorCode::index_out_of_range: return "index_out_of_range";
        case ErrorCode::insufficient_data: return "insufficient_data";
        case ErrorCode::domain_error: return "domain_error";
        case ErrorCode::shape_error: return "shape_error";
        case ErrorCode::config_error: return "config_error";
        case ErrorCode::complexity_error: return "complexity_error";
        case ErrorCode::io_error: return "io_error";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    const char* code_name() const noexcept { return error_code_name(code_); }

private:
    ErrorCode code_;
};

}  // namespace tbq
