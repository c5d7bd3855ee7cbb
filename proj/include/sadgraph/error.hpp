#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace sadgraph {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input text. `row()` is the 1-based data row (0 for the header).
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  [[nodiscard]] std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A linear predictor left the domain of the link function.
class DomainError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// The Gram matrix is singular, so the monotonicity modulus vanishes.
class RankDeficiencyError : public Error {
 public:
  using Error::Error;
};

class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// A classification criterion cannot be evaluated on the given labels.
class CriterionUndefinedError : public Error {
 public:
  using Error::Error;
};

}  // namespace sadgraph
