#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace gfl {

// Every error raised by the library derives from Error. The CLI maps
// ValidationError subclasses to exit code 2 and everything else to 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class RuntimeFault : public Error {
public:
    using Error::Error;
};

class SchemaError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UsageError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class CongruenceError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class PlanError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ConfigError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class StateError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class ContractError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class EncodeError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DecodeError : public ValidationError {
public:
    DecodeError(std::size_t offset, const std::string& what)
        : ValidationError("decode error at byte offset " + std::to_string(offset) + ": " + what),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IoError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class TimeoutError : public RuntimeFault {
public:
    using RuntimeFault::RuntimeFault;
};

class RoutingError : public RuntimeFault {
public:
    using RuntimeFault::RuntimeFault;
};

class TransportError : public RuntimeFault {
public:
    using RuntimeFault::RuntimeFault;
};

class SetupError : public RuntimeFault {
public:
    using RuntimeFault::RuntimeFault;
};

}  // namespace gfl
