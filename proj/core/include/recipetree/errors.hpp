#pragma once

#include <stdexcept>
#include <string>

namespace recipetree {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor shapes do not conform.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// An argument is outside its documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Input is numerically degenerate (e.g. zero-norm vector under cosine).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// A caller broke a documented contract (e.g. non-scalar output to a gradient check).
class ContractError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf appeared in a forward or backward pass.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Input data could not be ingested (empty corpus, malformed line, ...).
class IngestionError : public Error {
 public:
  using Error::Error;
};

/// A record or file violates a data invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Configuration is inconsistent with the requested operation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

}  // namespace recipetree
