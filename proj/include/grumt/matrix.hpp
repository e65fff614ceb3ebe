#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace grumt {

template <typename S>
using Vector = std::vector<S>;

// Dense row-major matrix. S is float on the training/inference path and
// double on the oracle path.
template <typename S>
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, S{0}) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  S& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const S& operator()(std::size_t r, std::size_t c) const {
    return data_[r * cols_ + c];
  }

  S* data() { return data_.data(); }
  const S* data() const { return data_.data(); }

  std::span<S> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const S> row(std::size_t r) const {
    return {data_.data() + r * cols_, cols_};
  }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<S> data_;
};

namespace detail {
inline void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}
}  // namespace detail

template <typename S>
Vector<S> matvec(const Matrix<S>& m, const Vector<S>& v) {
  detail::require(m.cols() == v.size(), "matvec: dimension mismatch");
  Vector<S> out(m.rows(), S{0});
  for (std::size_t i = 0; i < m.rows(); ++i) {
    S acc{0};
    const S* row = m.data() + i * m.cols();
    for (std::size_t j = 0; j < m.cols(); ++j) acc += row[j] * v[j];
    out[i] = acc;
  }
  return out;
}

// C = A * B
template <typename S>
Matrix<S> matmul(const Matrix<S>& a, const Matrix<S>& b) {
  detail::require(a.cols() == b.rows(), "matmul: dimension mismatch");
  Matrix<S> c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const S aik = a(i, k);
      if (aik == S{0}) continue;
      const S* brow = b.data() + k * b.cols();
      S* crow = c.data() + i * c.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

// C += A * B
template <typename S>
void add_matmul(Matrix<S>& c, const Matrix<S>& a, const Matrix<S>& b) {
  detail::require(a.cols() == b.rows() && c.rows() == a.rows() &&
                      c.cols() == b.cols(),
                  "add_matmul: dimension mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const S aik = a(i, k);
      if (aik == S{0}) continue;
      const S* brow = b.data() + k * b.cols();
      S* crow = c.data() + i * c.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
}

// C += A * B^T
template <typename S>
void add_matmul_abt(Matrix<S>& c, const Matrix<S>& a, const Matrix<S>& b) {
  detail::require(a.cols() == b.cols() && c.rows() == a.rows() &&
                      c.cols() == b.rows(),
                  "add_matmul_abt: dimension mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const S* arow = a.data() + i * a.cols();
    for (std::size_t j = 0; j < b.rows(); ++j) {
      const S* brow = b.data() + j * b.cols();
      S acc{0};
      for (std::size_t k = 0; k < a.cols(); ++k) acc += arow[k] * brow[k];
      c(i, j) += acc;
    }
  }
}

// C = A^T * B
template <typename S>
Matrix<S> matmul_atb(const Matrix<S>& a, const Matrix<S>& b) {
  detail::require(a.rows() == b.rows(), "matmul_atb: dimension mismatch");
  Matrix<S> c(a.cols(), b.cols());
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const S* arow = a.data() + k * a.cols();
    const S* brow = b.data() + k * b.cols();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const S aki = arow[i];
      if (aki == S{0}) continue;
      S* crow = c.data() + i * c.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
    }
  }
  return c;
}

// C += A^T * B
template <typename S>
void add_matmul_atb(Matrix<S>& c, const Matrix<S>& a, const Matrix<S>& b) {
  detail::require(a.rows() == b.rows() && c.rows() == a.cols() &&
                      c.cols() == b.cols(),
                  "add_matmul_atb: dimension mismatch");
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const S* arow = a.data() + k * a.cols();
    const S* brow = b.data() + k * b.cols();
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const S aki = arow[i];
      if (aki == S{0}) continue;
      S* crow = c.data() + i * c.cols();
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aki * brow[j];
    }
  }
}

}  // namespace grumt
