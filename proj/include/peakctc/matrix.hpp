// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0

#ifndef PEAKCTC_MATRIX_HPP_
#define PEAKCTC_MATRIX_HPP_

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace peakctc {

// Dense row-major matrix of doubles. This is deliberately minimal: the
// lattices and the encoder need storage, indexing and a handful of
// elementwise helpers, nothing more.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double &operator()(std::size_t r, std::size_t c) {
    return data_[r * cols_ + c];
  }
  double operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  double *row_ptr(std::size_t r) { return data_.data() + r * cols_; }
  const double *row_ptr(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double> &data() { return data_; }
  const std::vector<double> &data() const { return data_; }

  void fill(double v) { data_.assign(data_.size(), v); }

  bool same_shape(const Matrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  Matrix &operator+=(const Matrix &other) {
    if (!same_shape(other)) throw std::invalid_argument("Matrix += shape mismatch");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += other.data_[i];
    return *this;
  }

  Matrix &operator*=(double s) {
    for (double &v : data_) v *= s;
    return *this;
  }

  bool operator==(const Matrix &other) const {
    return rows_ == other.rows_ && cols_ == other.cols_ && data_ == other.data_;
  }

 private:
  std::size_t rows_, cols_;
  std::vector<double> data_;
};

}  // namespace peakctc

#endif  // PEAKCTC_MATRIX_HPP_
