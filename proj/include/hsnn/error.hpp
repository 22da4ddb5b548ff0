#pragma once

#include <stdexcept>
#include <string>

namespace hsnn {

enum class ErrorKind {
    config,    // bad geometry, bad hyperparameter, schema violation
    input,     // bad runtime data (files, labels, empty sets)
    io,        // filesystem / serialization failure
    run,       // training diverged or a run-level contract broke
    internal,  // invariant violation inside the engine
};

const char* error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) { throw Error(ErrorKind::config, msg); }
[[noreturn]] inline void throw_input(const std::string& msg) { throw Error(ErrorKind::input, msg); }
[[noreturn]] inline void throw_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }
[[noreturn]] inline void throw_run(const std::string& msg) { throw Error(ErrorKind::run, msg); }
[[noreturn]] inline void throw_internal(const std::string& msg) { throw Error(ErrorKind::internal, msg); }

}  // namespace hsnn
