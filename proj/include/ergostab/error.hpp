#pragma once

#include <stdexcept>
#include <string>

namespace ergostab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument is outside its documented domain.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Matrix/vector shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An iterate became non-finite or left the divergence radius.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

/// A kernel or operator that must be inverted is numerically singular.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// Not enough usable data for an estimator.
class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace ergostab
