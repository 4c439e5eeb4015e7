#pragma once

#include <stdexcept>
#include <string>

namespace strukt {

// Error classes map one-to-one onto CLI exit codes.
enum class ErrorKind {
    validation = 1,  // a check ran and failed (conformance, mapping, hash mismatch)
    usage      = 2,  // bad flags, malformed or invalid specs
    io         = 3,  // missing/unreadable/unwritable files
    internal   = 4,  // should-not-happen states
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail_validation(const std::string& msg) { throw Error(ErrorKind::validation, msg); }
[[noreturn]] inline void fail_usage(const std::string& msg) { throw Error(ErrorKind::usage, msg); }
[[noreturn]] inline void fail_io(const std::string& msg) { throw Error(ErrorKind::io, msg); }
[[noreturn]] inline void fail_internal(const std::string& msg) { throw Error(ErrorKind::internal, msg); }

} // namespace strukt
