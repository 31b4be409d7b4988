#pragma once

#include <stdexcept>
#include <string>

namespace aes {

/// Category of a failure. The C API and the CLI exit codes are derived from it.
enum class ErrorKind {
    Usage,            // caller violated a precondition (bad flag, bad argument)
    Io,               // file could not be opened, read, or written
    UnsupportedCodec, // RIFF/WAVE container with a sample format we do not decode
    Truncated,        // container promises more bytes than the file holds
    Format,           // malformed file contents (bad magic, bad JSON, checksum)
    Data,             // well-formed input that violates a data contract
    Numerical,        // degenerate or non-finite arithmetic
};

const char* to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace aes
