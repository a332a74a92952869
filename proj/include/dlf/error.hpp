#pragma once

#include <stdexcept>
#include <string>

namespace dlf {

// Every failure the library reports is a dlf::Error carrying a kind, so the
// CLI can map it to an exit code without string matching.
enum class ErrorKind {
    invalid_input,
    shape,
    format,
    length,
    version,
    causality,
    checkpoint_mismatch,
    config,
    io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace dlf
