#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace tda {

/// Dense row-major matrix of doubles.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  std::size_t size() const { return data.size(); }
  bool operator==(const Matrix&) const = default;
};

/// out[i] = sum_j m(i, j) * x[j], summed in ascending j starting from 0.0.
/// Every dense projection in the library goes through this so that
/// equivalent layers accumulate in the same order.
inline void matvec(const Matrix& m, std::span<const double> x, std::span<double> out) {
  for (std::size_t i = 0; i < m.rows; ++i) {
    const double* w = m.data.data() + i * m.cols;
    double acc = 0.0;
    for (std::size_t j = 0; j < m.cols; ++j) acc += w[j] * x[j];
    out[i] = acc;
  }
}

}  // namespace tda
