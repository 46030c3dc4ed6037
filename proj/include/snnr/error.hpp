#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace snnr {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tensor shapes that do not fit together.
class DimensionError : public Error {
public:
    using Error::Error;
};

/// Argument outside the domain of an operation (bad pixel value, empty dataset, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed binary or text input. Carries the byte offset where parsing failed.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::uint64_t offset)
        : Error(what + " (at byte offset " + std::to_string(offset) + ")"), offset_(offset) {}

    std::uint64_t offset() const noexcept { return offset_; }

private:
    std::uint64_t offset_;
};

/// Training diverged or produced non-finite values.
class TrainingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Invalid run configuration (schema violation, unknown key, bad value).
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace snnr
