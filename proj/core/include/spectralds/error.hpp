#pragma once

#include <stdexcept>
#include <string>

namespace spectralds {

class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
public:
  using Error::Error;
};

class DomainError : public Error {
public:
  using Error::Error;
};

class ConvergenceError : public Error {
public:
  using Error::Error;
};

class DivergenceError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

class ChecksumError : public IoError {
public:
  using IoError::IoError;
};

class SchemaError : public IoError {
public:
  using IoError::IoError;
};

class TruncatedPayloadError : public IoError {
public:
  using IoError::IoError;
};

}  // namespace spectralds
