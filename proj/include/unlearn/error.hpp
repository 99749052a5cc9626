#pragma once

#include <stdexcept>
#include <string>

namespace unlearn {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or index mismatch between a model and its inputs.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Caller supplied an argument outside its documented range.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Training loss left the finite range, or exceeded the divergence bound.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace unlearn
