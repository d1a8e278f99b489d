#pragma once

#include <stdexcept>
#include <string>

namespace tda {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A structural description (delay spec, topology, config) is inconsistent.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

/// Runtime data does not match the shapes a model or layer expects.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity reached a place where it cannot be tolerated.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Malformed on-disk content (IDX, checkpoint, config file).
class ParseError : public Error {
 public:
  using Error::Error;
};

/// The filesystem refused a read or write.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace tda
