#pragma once

#include <cmath>
#include <initializer_list>
#include <vector>

#include "phid/errors.hpp"

namespace phid {

/// Dense row-major matrix of doubles. Scalars are 1x1, row vectors 1xc,
/// column vectors rx1. All numerics in the library run on this type.
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {}

  static Matrix scalar(double v) {
    Matrix m(1, 1);
    m.data_[0] = v;
    return m;
  }

  /// Build from nested initializer lists, row by row.
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    int r = static_cast<int>(rows.size());
    int c = r > 0 ? static_cast<int>(rows.begin()->size()) : 0;
    Matrix m(r, c);
    int i = 0;
    for (const auto& row : rows) {
      if (static_cast<int>(row.size()) != c) throw ShapeError("from_rows: ragged rows");
      int j = 0;
      for (double v : row) m(i, j++) = v;
      ++i;
    }
    return m;
  }

  static Matrix row(std::initializer_list<double> vals) {
    Matrix m(1, static_cast<int>(vals.size()));
    int j = 0;
    for (double v : vals) m(0, j++) = v;
    return m;
  }

  static Matrix row(const std::vector<double>& vals) {
    Matrix m(1, static_cast<int>(vals.size()));
    for (size_t j = 0; j < vals.size(); ++j) m.data_[j] = vals[j];
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }
  double& operator[](size_t i) { return data_[i]; }
  double operator[](size_t i) const { return data_[i]; }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  bool is_scalar() const { return rows_ == 1 && cols_ == 1; }

  double scalar_value() const {
    if (!is_scalar()) throw ShapeError("scalar_value on non-scalar matrix");
    return data_[0];
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : data_) m = std::max(m, std::abs(v));
    return m;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

inline double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace phid
