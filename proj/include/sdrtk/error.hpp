#pragma once

#include <stdexcept>
#include <string>

namespace sdrtk {

enum class ErrorKind {
    Format,  // malformed bytes or files
    Config,  // missing or invalid metadata / configuration
    Io,      // filesystem failures
    Value,   // DSP precondition violated
    Range,   // frequency or offset outside a hardware or capture limit
    State,   // operation not allowed in the current session state
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct FormatError : Error {
    explicit FormatError(const std::string& what) : Error(ErrorKind::Format, what) {}
};
struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};
struct IoError : Error {
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};
struct ValueError : Error {
    explicit ValueError(const std::string& what) : Error(ErrorKind::Value, what) {}
};
struct RangeError : Error {
    explicit RangeError(const std::string& what) : Error(ErrorKind::Range, what) {}
};
struct StateError : Error {
    explicit StateError(const std::string& what) : Error(ErrorKind::State, what) {}
};

}  // namespace sdrtk
