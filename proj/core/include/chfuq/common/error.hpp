#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace chfuq {

/// Base error for domain/precondition violations inside the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// Bad usage: unreadable files, malformed configs, schema problems. Maps to exit code 2.
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(what) {}
};

/// Numerical or training failure (divergence, NaN gradients, infeasible
/// coverage gate). Maps to exit code 1.
class TrainingError : public Error {
public:
    explicit TrainingError(const std::string& what) : Error(what) {}
};

namespace detail {
inline std::string format_message(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    char buf[1024];
    std::vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    return std::string(buf);
}
}  // namespace detail

}  // namespace chfuq

#define CHFUQ_THROW(ErrorType, ...) \
    throw ErrorType(::chfuq::detail::format_message(__VA_ARGS__))
