#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace groundcheck {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A malformed input record (corpus line, entity line, edge line).
/// `record` is the 1-based line number within the source stream.
class IngestError : public Error {
public:
    IngestError(std::size_t record, const std::string& what)
        : Error("record " + std::to_string(record) + ": " + what), record_(record) {}
    std::size_t record() const noexcept { return record_; }

private:
    std::size_t record_;
};

/// Duplicate identifier during ingestion.
class ConflictError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

/// Violated operation precondition (caller bug or inconsistent inputs).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Benchmark construction could not produce a task.
class ConstructionError : public Error {
public:
    using Error::Error;
};

/// Network-level failure, or retries exhausted on transient provider failures.
class TransportError : public Error {
public:
    using Error::Error;
};

/// Non-retryable, non-2xx provider reply.
class ProviderError : public Error {
public:
    ProviderError(int status, std::string body_excerpt)
        : Error("provider returned HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status),
          body_excerpt_(std::move(body_excerpt)) {}
    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_excerpt_; }

private:
    int status_;
    std::string body_excerpt_;
};

/// Structured LLM output could not be parsed into the expected shape.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Invalid or incomplete run configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Index file or artifact with an unexpected format.
class FormatError : public Error {
public:
    using Error::Error;
};

}  // namespace groundcheck
