#pragma once

#include <stdexcept>
#include <string>

namespace beampred {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Input data or configuration is malformed. The CLI maps these to exit code 2.
class DataError : public Error {
   public:
    using Error::Error;
};

class ConfigError : public DataError {
   public:
    using DataError::DataError;
};

class ParseError : public DataError {
   public:
    ParseError(const std::string& what, std::size_t line)
        : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

   private:
    std::size_t line_;
};

class IoError : public DataError {
   public:
    using DataError::DataError;
};

/// Value outside the admissible range (beam index, AoD, ...).
class RangeError : public DataError {
   public:
    using DataError::DataError;
};

class DomainError : public Error {
   public:
    using Error::Error;
};

class IndexError : public Error {
   public:
    using Error::Error;
};

class ShapeError : public Error {
   public:
    using Error::Error;
};

class NumericError : public Error {
   public:
    using Error::Error;
};

}  // namespace beampred
