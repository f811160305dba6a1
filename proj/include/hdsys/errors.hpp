#pragma once

#include <stdexcept>
#include <string>

namespace hdsys {

/// Machine-readable failure categories; the CLI maps them to exit codes.
enum class ErrorCode {
    argument,        // bad call-site input (dimension mismatch, negative weight, ...)
    config,          // malformed or inconsistent problem/scenario data
    gate_failure,    // a smallness condition does not hold
    non_convergence, // an iteration exhausted its budget
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message)
        : std::runtime_error(std::move(message)), code_(code) {}

    ErrorCode code() const { return code_; }

    const char* code_name() const {
        switch (code_) {
        case ErrorCode::argument: return "argument";
        case ErrorCode::config: return "config";
        case ErrorCode::gate_failure: return "gate_failure";
        case ErrorCode::non_convergence: return "non_convergence";
        }
        return "unknown";
    }

private:
    ErrorCode code_;
};

/// Iteration budget exhausted; carries the failing node (or -1 for a
/// trajectory-level loop) and the last residual/increment seen.
class NonConvergence : public Error {
public:
    NonConvergence(std::string where, int node, double residual, int iterations)
        : Error(ErrorCode::non_convergence,
                where + ": no convergence after " + std::to_string(iterations) +
                    " iterations (node " + std::to_string(node) +
                    ", residual " + std::to_string(residual) + ")"),
          node_(node), residual_(residual), iterations_(iterations) {}

    int node() const { return node_; }
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    int node_;
    double residual_;
    int iterations_;
};

inline void require(bool cond, ErrorCode code, const std::string& message) {
    if (!cond) throw Error(code, message);
}

inline void require_arg(bool cond, const std::string& message) {
    require(cond, ErrorCode::argument, message);
}

} // namespace hdsys
