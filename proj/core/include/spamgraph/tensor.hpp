#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "spamgraph/error.hpp"

namespace spamgraph {

// Dense row-major matrix. Vectors are 1xN or Nx1 matrices.
template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) {
      throw InvalidArgument("matrix data size " + std::to_string(data_.size()) +
                            " does not match shape " + std::to_string(rows_) + "x" +
                            std::to_string(cols_));
    }
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }
  const T& operator()(std::size_t r, std::size_t c) const {
    assert(r < rows_ && c < cols_);
    return data_[r * cols_ + c];
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  std::span<T> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::span<T> flat() { return data_; }
  std::span<const T> flat() const { return data_; }

  void fill(T value) { std::fill(data_.begin(), data_.end(), value); }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    std::transform(data_.begin(), data_.end(), out.data(),
                   [](T v) { return static_cast<U>(v); });
    return out;
  }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

template <class T>
std::string shape_string(const Matrix<T>& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

template <class T>
bool all_finite(const Matrix<T>& m) {
  return std::all_of(m.data(), m.data() + m.size(), [](T v) { return std::isfinite(v); });
}

// out = a * b
template <class T>
Matrix<T> matmul(const Matrix<T>& a, const Matrix<T>& b) {
  if (a.cols() != b.rows()) {
    throw InvalidArgument("matmul shape mismatch: " + shape_string(a) + " * " + shape_string(b));
  }
  Matrix<T> out(a.rows(), b.cols());
  const std::size_t inner = a.cols();
  const std::size_t width = b.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    T* orow = out.data() + i * width;
    const T* arow = a.data() + i * inner;
    for (std::size_t k = 0; k < inner; ++k) {
      const T av = arow[k];
      if (av == T{}) continue;
      const T* brow = b.data() + k * width;
      for (std::size_t j = 0; j < width; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

// out += a^T * b
template <class T>
void matmul_at_b_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  assert(a.rows() == b.rows() && out.rows() == a.cols() && out.cols() == b.cols());
  const std::size_t width = b.cols();
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const T* arow = a.data() + r * a.cols();
    const T* brow = b.data() + r * width;
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const T av = arow[i];
      if (av == T{}) continue;
      T* orow = out.data() + i * width;
      for (std::size_t j = 0; j < width; ++j) orow[j] += av * brow[j];
    }
  }
}

// out += a * b^T
template <class T>
void matmul_a_bt_acc(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  assert(a.cols() == b.cols() && out.rows() == a.rows() && out.cols() == b.rows());
  const std::size_t inner = a.cols();
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const T* arow = a.data() + i * inner;
    T* orow = out.data() + i * out.cols();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const T* brow = b.data() + j * inner;
      T acc{};
      for (std::size_t k = 0; k < inner; ++k) acc += arow[k] * brow[k];
      orow[j] += acc;
    }
  }
}

template <class T>
void add_inplace(Matrix<T>& dst, const Matrix<T>& src) {
  assert(dst.same_shape(src));
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

}  // namespace spamgraph
