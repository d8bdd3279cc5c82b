#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace spdebias {

// Repo-wide tolerances. Both are multiplied by scale = max(1, |objective|)
// where an objective is available.
inline constexpr double kFeasTol = 1e-9;
inline constexpr double kDualTol = 1e-8;

inline double tolerance_scale(double magnitude) {
  return std::max(1.0, std::abs(magnitude));
}

enum class ErrorCode {
  DimensionMismatch,
  NumericalFailure,
  Infeasible,
  OutOfRange,
  MaxDepthExceeded,
  BreakpointAmbiguity,
  NonUniquePrimal,
  DegeneratePrimal,
  SingularSystem,
  EpsilonOutOfRange,
  InconsistentCounts,
  EmptyGraph,
  InvalidArgument,
  Config,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> init);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  const std::vector<double>& data() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Vector = std::vector<double>;
using CountVector = std::vector<std::int64_t>;

double dot(const Vector& a, const Vector& b);
Vector to_real(const CountVector& counts);

}  // namespace spdebias
