#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "idvt/error.hpp"

namespace idvt {

// Dense row-major matrix of doubles. Vectors are represented as n x 1.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix column(std::initializer_list<double> values);

  std::size_t size() const noexcept { return data.size(); }
  bool same_shape(const Matrix& other) const noexcept {
    return rows == other.rows && cols == other.cols;
  }

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const { return {data.data() + r * cols, cols}; }

  void fill(double v);
  Matrix& operator+=(const Matrix& other);
  bool all_finite() const noexcept;
};

double dot(std::span<const double> a, std::span<const double> b);
double l2_norm(std::span<const double> a);
Matrix transposed(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);
double max_abs_diff(const Matrix& a, const Matrix& b);

}  // namespace idvt
