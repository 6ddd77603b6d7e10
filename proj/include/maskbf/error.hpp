#pragma once

#include <stdexcept>
#include <string>

namespace maskbf {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

/// A mask or covariance violated a sign/definiteness constraint.
class ConstraintViolation : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed files in a dataset directory. what() names the path.
class DatasetError : public Error {
 public:
  using Error::Error;
};

}  // namespace maskbf
