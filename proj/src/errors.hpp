#pragma once

#include <stdexcept>
#include <string>

namespace sentibench {

// Failure category, mirrored one-to-one by the C API status codes and the
// CLI exit codes.
enum class ErrorKind {
    config,
    data,
    numeric,
    io,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& m) : Error(ErrorKind::config, m) {}
};

struct DataError : Error {
    explicit DataError(const std::string& m) : Error(ErrorKind::data, m) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& m) : Error(ErrorKind::numeric, m) {}
};

struct IoError : Error {
    explicit IoError(const std::string& m) : Error(ErrorKind::io, m) {}
};

} // namespace sentibench
