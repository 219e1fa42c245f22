#pragma once

#include <stdexcept>
#include <string>

namespace facescan {

enum class ErrorKind {
    Config,             // inconsistent layer/network description
    Parse,              // malformed text input
    Io,                 // file system failure
    Format,             // bad magic, unsupported version, structural damage
    Truncated,          // blob ends before the manifest says it should
    ShapeMismatch,      // tensor/layer shapes disagree
    InvalidArgument,
    Numeric,            // non-finite values where finite ones are required
    TooSmall,           // input image below the network window
    SamplingExhausted,  // rejection sampling ran out of attempts
    IllConditioned,     // singular normal equations
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Config: return "config";
        case ErrorKind::Parse: return "parse";
        case ErrorKind::Io: return "io";
        case ErrorKind::Format: return "format";
        case ErrorKind::Truncated: return "truncated";
        case ErrorKind::ShapeMismatch: return "shape-mismatch";
        case ErrorKind::InvalidArgument: return "invalid-argument";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::TooSmall: return "too-small";
        case ErrorKind::SamplingExhausted: return "sampling-exhausted";
        case ErrorKind::IllConditioned: return "ill-conditioned";
    }
    return "unknown";
}

}  // namespace facescan
