#pragma once

#include <stdexcept>
#include <string>

namespace fqr {

/// Error categories surfaced by the CLI as machine-readable kinds.
enum class ErrorKind { io, parse, validation, solver };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    const char* kind_name() const noexcept {
        switch (kind_) {
            case ErrorKind::io: return "io";
            case ErrorKind::parse: return "parse";
            case ErrorKind::validation: return "validation";
            case ErrorKind::solver: return "solver";
        }
        return "unknown";
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_io(std::string msg) { throw Error(ErrorKind::io, std::move(msg)); }
[[noreturn]] inline void throw_parse(std::string msg) { throw Error(ErrorKind::parse, std::move(msg)); }
[[noreturn]] inline void throw_validation(std::string msg) { throw Error(ErrorKind::validation, std::move(msg)); }
[[noreturn]] inline void throw_solver(std::string msg) { throw Error(ErrorKind::solver, std::move(msg)); }

}  // namespace fqr
