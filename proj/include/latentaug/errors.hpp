// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace latentaug {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Shapes or lengths of two operands disagree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Non-finite intermediate value.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class MissingPartnerError : public Error {
 public:
  using Error::Error;
};

/// All candidate views have zero likelihood mass.
class DegenerateLikelihoodError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Loader errors.
class FormatError : public Error {
 public:
  using Error::Error;
};

class LengthError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
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

}  // namespace latentaug
