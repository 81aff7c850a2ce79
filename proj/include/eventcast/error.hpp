#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace eventcast {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: malformed files, inconsistent shapes, missing records.
/// The CLI maps these to exit code 3.
class DataError : public Error {
public:
    using Error::Error;
};

/// Failures while running a computation or talking to a remote service.
/// The CLI maps these to exit code 4.
class RuntimeError : public Error {
public:
    using Error::Error;
};

class MalformedRecord : public DataError {
public:
    MalformedRecord(std::string file, std::size_t line, std::string reason)
        : DataError(file + ":" + std::to_string(line) + ": " + reason),
          file_(std::move(file)), line_(line), reason_(std::move(reason)) {}

    const std::string& file() const noexcept { return file_; }
    std::size_t line() const noexcept { return line_; }
    const std::string& reason() const noexcept { return reason_; }

private:
    std::string file_;
    std::size_t line_;
    std::string reason_;
};

class DateOrderViolation : public DataError {
public:
    DateOrderViolation(std::string file, std::size_t line, std::string record)
        : DataError(file + ":" + std::to_string(line) + ": end date precedes start date in " + record),
          record_(std::move(record)) {}

    const std::string& record() const noexcept { return record_; }

private:
    std::string record_;
};

class UnknownCountry : public DataError {
public:
    explicit UnknownCountry(const std::string& code) : DataError("unknown country: " + code) {}
};

class UnboundPlaceholder : public DataError {
public:
    explicit UnboundPlaceholder(std::string name)
        : DataError("unbound placeholder [" + name + "]"), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

class MissingResultBlock : public DataError {
public:
    explicit MissingResultBlock(std::string raw)
        : DataError("response has no <result>...</result> block"), raw_(std::move(raw)) {}

    /// The response text as received, kept for audit.
    const std::string& raw() const noexcept { return raw_; }

private:
    std::string raw_;
};

class FieldCountMismatch : public DataError {
public:
    FieldCountMismatch(std::size_t found, std::size_t expected)
        : DataError("result block has " + std::to_string(found) + " fields, expected " +
                    std::to_string(expected)),
          found_(found), expected_(expected) {}

    std::size_t found() const noexcept { return found_; }
    std::size_t expected() const noexcept { return expected_; }

private:
    std::size_t found_;
    std::size_t expected_;
};

class EmptyField : public DataError {
public:
    explicit EmptyField(std::size_t index)
        : DataError("result field " + std::to_string(index) + " is empty"), index_(index) {}

    std::size_t index() const noexcept { return index_; }

private:
    std::size_t index_;
};

class PositionOverflow : public DataError {
public:
    PositionOverflow(std::size_t count, std::size_t max)
        : DataError("summary has " + std::to_string(count) + " tokens, max positions is " +
                    std::to_string(max)) {}
};

class ShapeMismatch : public DataError {
public:
    using DataError::DataError;
};

/// Vector operands of different sizes.
class DimensionMismatch : public ShapeMismatch {
public:
    using ShapeMismatch::ShapeMismatch;
};

class LengthMismatch : public ShapeMismatch {
public:
    LengthMismatch(std::size_t a, std::size_t b)
        : ShapeMismatch("length mismatch: " + std::to_string(a) + " vs " + std::to_string(b)) {}
};

class EmptyInput : public DataError {
public:
    using DataError::DataError;
};

class MissingSummary : public DataError {
public:
    explicit MissingSummary(std::size_t horizon)
        : DataError("no summary for horizon " + std::to_string(horizon)), horizon_(horizon) {}

    std::size_t horizon() const noexcept { return horizon_; }

private:
    std::size_t horizon_;
};

class InsufficientData : public DataError {
public:
    using DataError::DataError;
};

class TransportError : public RuntimeError {
public:
    TransportError(int status, std::string reason, int attempts)
        : RuntimeError("transport error (status " + std::to_string(status) + ", " +
                       std::to_string(attempts) + " attempts): " + reason),
          status_(status), attempts_(attempts) {}

    /// HTTP status, or 0 when no response was received.
    int status() const noexcept { return status_; }
    int attempts() const noexcept { return attempts_; }

private:
    int status_;
    int attempts_;
};

class TimeoutError : public RuntimeError {
public:
    explicit TimeoutError(int attempts)
        : RuntimeError("request timed out after " + std::to_string(attempts) + " attempts"),
          attempts_(attempts) {}

    int attempts() const noexcept { return attempts_; }

private:
    int attempts_;
};

class NonFiniteLoss : public RuntimeError {
public:
    NonFiniteLoss(std::size_t epoch, std::size_t batch)
        : RuntimeError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                       std::to_string(batch)),
          epoch_(epoch), batch_(batch) {}

    std::size_t epoch() const noexcept { return epoch_; }
    std::size_t batch() const noexcept { return batch_; }

private:
    std::size_t epoch_;
    std::size_t batch_;
};

} // namespace eventcast
