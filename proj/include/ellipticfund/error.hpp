#pragma once

#include <stdexcept>
#include <string>

namespace ellipticfund {

enum class ErrorKind {
    invalid_input,
    internal,
    convergence,
    step_size,
    bracket,
    decomposition,
    undefined_ratio,
    classification,
    ladder_too_deep,
    io,
};

const char* to_string(ErrorKind kind);

/// Base exception for every failure surfaced by the library. The kind drives
/// the CLI exit code.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw Error(kind, what);
}

}  // namespace ellipticfund
