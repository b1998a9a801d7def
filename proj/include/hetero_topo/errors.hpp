#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hetero_topo {

/// Base of every error raised by the library. `exit_code()` is what the CLI
/// returns when the error escapes a subcommand.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual int exit_code() const noexcept { return 1; }
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// Doubly stochastic validation failures.
class ValidationError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 4; }
};

class RowSumViolation : public ValidationError {
 public:
  RowSumViolation(std::size_t row, double residual)
      : ValidationError("row " + std::to_string(row) + " sums to 1 + " + std::to_string(residual)),
        row_(row), residual_(residual) {}
  std::size_t row() const noexcept { return row_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t row_;
  double residual_;
};

class ColSumViolation : public ValidationError {
 public:
  ColSumViolation(std::size_t col, double residual)
      : ValidationError("column " + std::to_string(col) + " sums to 1 + " + std::to_string(residual)),
        col_(col), residual_(residual) {}
  std::size_t col() const noexcept { return col_; }
  double residual() const noexcept { return residual_; }

 private:
  std::size_t col_;
  double residual_;
};

class NegativeEntry : public ValidationError {
 public:
  NegativeEntry(std::size_t row, std::size_t col, double value)
      : ValidationError("entry (" + std::to_string(row) + ", " + std::to_string(col) +
                        ") is outside [0, 1]: " + std::to_string(value)),
        row_(row), col_(col), value_(value) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }
  double value() const noexcept { return value_; }

 private:
  std::size_t row_, col_;
  double value_;
};

class OddNForAlternatingRing : public InvalidArgument {
 public:
  explicit OddNForAlternatingRing(std::size_t n)
      : InvalidArgument("alternating/clustered ring needs an even node count, got " + std::to_string(n)) {}
};

class OddN : public InvalidArgument {
 public:
  explicit OddN(std::size_t n)
      : InvalidArgument("mean estimation needs an even node count, got " + std::to_string(n)) {}
};

class NumericalError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 5; }
};

/// Raised by iterative solvers that hit their cap. Carries the last iterate so
/// callers can inspect how far off it was.
class NoConvergence : public NumericalError {
 public:
  NoConvergence(std::string what, std::size_t iterations, double residual, std::vector<double> last_iterate)
      : NumericalError(what + " did not converge after " + std::to_string(iterations) +
                       " iterations (residual " + std::to_string(residual) + ")"),
        iterations_(iterations), residual_(residual), last_iterate_(std::move(last_iterate)) {}
  std::size_t iterations() const noexcept { return iterations_; }
  double residual() const noexcept { return residual_; }
  const std::vector<double>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::size_t iterations_;
  double residual_;
  std::vector<double> last_iterate_;
};

class NonFiniteCost : public NumericalError {
 public:
  NonFiniteCost(std::size_t row, std::size_t col)
      : NumericalError("non-finite cost at (" + std::to_string(row) + ", " + std::to_string(col) + ")"),
        row_(row), col_(col) {}
  std::size_t row() const noexcept { return row_; }
  std::size_t col() const noexcept { return col_; }

 private:
  std::size_t row_, col_;
};

class InvalidBudget : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class SamplingFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ScheduleExhausted : public Error {
 public:
  ScheduleExhausted(std::size_t t, std::size_t length)
      : Error("mixing schedule of length " + std::to_string(length) + " exhausted at iteration " +
              std::to_string(t)) {}
};

class NonPositiveD : public InvalidArgument {
 public:
  NonPositiveD() : InvalidArgument("tuned stepsize requires d > 0") {}
};

class ZeroP : public InvalidArgument {
 public:
  ZeroP() : InvalidArgument("iteration budget requires a mixing parameter p in (0, 1]") {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& path, const std::string& field, const std::string& why)
      : Error(path + ": field '" + field + "': " + why), path_(path), field_(field) {}
  int exit_code() const noexcept override { return 2; }
  const std::string& path() const noexcept { return path_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::string path_, field_;
};

class IoError : public Error {
 public:
  using Error::Error;
  int exit_code() const noexcept override { return 3; }
};

}  // namespace hetero_topo
