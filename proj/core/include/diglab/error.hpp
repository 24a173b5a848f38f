#pragma once

#include <stdexcept>
#include <string>

namespace diglab {

/// Base of every error thrown by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A file could not be read or written.
class IoError : public Error {
public:
    using Error::Error;
};

/// A document could not be parsed. `where` is a JSON pointer or "line N".
class ParseError : public Error {
public:
    ParseError(std::string where, const std::string& what)
        : Error(where.empty() ? what : where + ": " + what), where_(std::move(where)) {}
    const std::string& where() const noexcept { return where_; }

private:
    std::string where_;
};

/// Input parsed but violates a domain invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Relic geometry is unusable (touches the clod boundary, produces no surface, ...).
class DegenerateArtifactError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Operation not allowed in the session's current state.
class SessionError : public Error {
public:
    using Error::Error;
};

class UnknownToolError : public SessionError {
public:
    using SessionError::SessionError;
};

/// Replay header does not match the spec supplied to replay it.
class ReplayMismatchError : public Error {
public:
    using Error::Error;
};

}  // namespace diglab
