#pragma once

#include <cstddef>
#include <initializer_list>
#include <vector>

#include "hiertag/errors.hpp"

namespace hiertag {

// Dense row-major matrix of doubles. Column vectors are shaped (n, 1).
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), 0.0) {
    if (rows < 0 || cols < 0) throw ShapeMismatch("negative matrix dimension");
  }

  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const int r = static_cast<int>(rows.size());
    const int c = r == 0 ? 0 : static_cast<int>(rows.begin()->size());
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c) throw ShapeMismatch("ragged initializer");
      int j = 0;
      for (double x : row) m(i, j++) = x;
      ++i;
    }
    return m;
  }

  static Matrix column(std::initializer_list<double> xs) {
    Matrix m(static_cast<int>(xs.size()), 1);
    int i = 0;
    for (double x : xs) m(i++, 0) = x;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  double& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  void fill(double x) { v_.assign(v_.size(), x); }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> v_;
};

}  // namespace hiertag
