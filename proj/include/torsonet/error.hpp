#pragma once

#include <stdexcept>
#include <string>

namespace torsonet {

// Error categories map onto CLI exit codes: usage (2), data/format (3),
// runtime/numeric (4).
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ShapeError : public Error {
public:
  using Error::Error;
};

class ArgumentError : public Error {
public:
  using Error::Error;
};

class StateError : public Error {
public:
  using Error::Error;
};

class NumericError : public Error {
public:
  using Error::Error;
};

class DataError : public Error {
public:
  using Error::Error;
};

class FormatError : public DataError {
public:
  using DataError::DataError;
};

class IoError : public DataError {
public:
  using DataError::DataError;
};

class CorruptionError : public DataError {
public:
  using DataError::DataError;
};

// Training divergence (non-finite loss); carries epoch/batch in the message.
class DivergedError : public NumericError {
public:
  using NumericError::NumericError;
};

}  // namespace torsonet
