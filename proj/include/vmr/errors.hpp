#pragma once

#include <stdexcept>
#include <string>

namespace vmr {

// Construction-time invariant violations on domain types.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Transport or protocol failures from a model backend.
class BackendError : public std::runtime_error {
public:
    BackendError(const std::string& what, bool retryable)
        : std::runtime_error(what), retryable_(retryable) {}

    bool retryable() const { return retryable_; }

private:
    bool retryable_;
};

// Annotation file problems; carries the offending line when known.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what, long line = -1)
        : std::runtime_error(line >= 0 ? what + " (line " + std::to_string(line) + ")" : what),
          line_(line) {}

    long line() const { return line_; }

private:
    long line_;
};

}  // namespace vmr
