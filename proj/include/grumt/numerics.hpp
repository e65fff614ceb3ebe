#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <stdexcept>
#include <utility>

#include "grumt/matrix.hpp"
#include "grumt/rng.hpp"

namespace grumt {

// Smallest probability fed to a logarithm anywhere in the library.
inline constexpr double kProbFloor = 1e-12;

template <typename S>
S sigmoid_scalar(S x) {
  return S{1} / (S{1} + std::exp(-x));
}

template <typename S>
Vector<S> sigmoid(const Vector<S>& v) {
  Vector<S> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = sigmoid_scalar(v[i]);
  return out;
}

template <typename S>
Vector<S> tanh(const Vector<S>& v) {
  Vector<S> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = std::tanh(v[i]);
  return out;
}

template <typename S>
Vector<S> hadamard(const Vector<S>& a, const Vector<S>& b) {
  detail::require(a.size() == b.size(), "hadamard: length mismatch");
  Vector<S> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
  return out;
}

template <typename S>
void sigmoid_inplace(Matrix<S>& m) {
  S* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = sigmoid_scalar(p[i]);
}

template <typename S>
void tanh_inplace(Matrix<S>& m) {
  S* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = std::tanh(p[i]);
}

// Numerically stable softmax (max subtraction before exponentiation).
template <typename S>
Vector<S> softmax(const Vector<S>& v) {
  detail::require(!v.empty(), "softmax: empty input");
  const S peak = *std::max_element(v.begin(), v.end());
  Vector<S> out(v.size());
  S total{0};
  for (std::size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - peak);
    total += out[i];
  }
  for (auto& x : out) x /= total;
  return out;
}

template <typename S>
struct CrossEntropyResult {
  S loss;
  Vector<S> logit_grad;  // softmax output minus one-hot target
};

// Takes the already-normalized probability vector and the target class;
// returns the loss and the gradient with respect to the pre-softmax logits.
template <typename S>
CrossEntropyResult<S> cross_entropy(const Vector<S>& pred,
                                    std::size_t target_id) {
  detail::require(target_id < pred.size(), "cross_entropy: target out of range");
  CrossEntropyResult<S> r;
  r.loss = static_cast<S>(
      -std::log(std::max(static_cast<double>(pred[target_id]), kProbFloor)));
  r.logit_grad = pred;
  r.logit_grad[target_id] -= S{1};
  return r;
}

// Entries i.i.d. uniform(-b, b) with b = sqrt(6 / (rows + cols)).
template <typename S>
Matrix<S> glorot_uniform(std::size_t rows, std::size_t cols, Rng& rng) {
  detail::require(rows >= 1 && cols >= 1, "glorot_uniform: empty shape");
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Matrix<S> m(rows, cols);
  S* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    p[i] = static_cast<S>(rng.uniform(-bound, bound));
  }
  return m;
}

template <typename S>
Matrix<S> glorot_uniform(std::size_t rows, std::size_t cols,
                         std::uint64_t seed) {
  Rng rng(seed);
  return glorot_uniform<S>(rows, cols, rng);
}

// Central-difference check of an analytic gradient. Returns the worst
// relative error over all coordinates. Meant to run on the double path;
// the default epsilon assumes 64-bit arithmetic.
inline double finite_difference_check(
    const std::function<double(const Vector<double>&)>& f,
    const Vector<double>& params, const Vector<double>& analytic_grad,
    double epsilon = 1e-4) {
  detail::require(params.size() == analytic_grad.size(),
                  "finite_difference_check: size mismatch");
  detail::require(epsilon > 0, "finite_difference_check: epsilon must be > 0");
  Vector<double> p = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double saved = p[i];
    p[i] = saved + epsilon;
    const double up = f(p);
    p[i] = saved - epsilon;
    const double down = f(p);
    p[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error(
          "finite_difference_check: objective is not finite");
    }
    const double numeric = (up - down) / (2.0 * epsilon);
    const double denom = std::max(
        {std::abs(analytic_grad[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic_grad[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace grumt
