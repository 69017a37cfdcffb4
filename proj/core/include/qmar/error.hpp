#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace qmar {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A parameter lies outside its admissible domain (sigma <= 0, tau outside
/// (0,1), K < 1, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A lag or lead polynomial has a root on or inside the unit circle.
class StationarityError : public Error {
 public:
  using Error::Error;
};

/// The design matrix is rank deficient. `dependent_columns` lists the
/// column indices found to be linearly dependent on the others.
class DegeneracyError : public Error {
 public:
  DegeneracyError(const std::string& what, std::vector<std::size_t> dependent_columns)
      : Error(what), dependent_columns_(std::move(dependent_columns)) {}
  const std::vector<std::size_t>& dependent_columns() const noexcept { return dependent_columns_; }

 private:
  std::vector<std::size_t> dependent_columns_;
};

/// Too few observations remain for the requested fit.
class InsufficientDataError : public Error {
 public:
  InsufficientDataError(const std::string& what, std::size_t n_effective)
      : Error(what), n_effective_(n_effective) {}
  std::size_t n_effective() const noexcept { return n_effective_; }

 private:
  std::size_t n_effective_;
};

/// A first moment was requested from a law that has none.
class UndefinedMomentError : public Error {
 public:
  using Error::Error;
};

/// Iterative optimizer ran out of budget. `best_point` is the best
/// parameter vector seen, in the optimizer's parameterization.
class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, std::vector<double> best_point, double best_value)
      : Error(what), best_point_(std::move(best_point)), best_value_(best_value) {}
  const std::vector<double>& best_point() const noexcept { return best_point_; }
  double best_value() const noexcept { return best_value_; }

 private:
  std::vector<double> best_point_;
  double best_value_;
};

/// Numerical failure inside a solver (iteration cap, lost feasibility).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Malformed input data. `row` is 1-based, counting the header as row 1;
/// zero means "not row specific".
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t row = 0) : Error(what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

/// Invalid run configuration (unknown keys, inconsistent options).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace qmar
