#include "grumt/numerics.hpp"

#include <cmath>

#include <gtest/gtest.h>

#include "grumt/matrix.hpp"
#include "grumt/rng.hpp"

namespace grumt {
namespace {

TEST(Matvec, IdentityAndZero) {
  Matrix<double> identity(3, 3);
  for (std::size_t i = 0; i < 3; ++i) identity(i, i) = 1.0;
  const Vector<double> v{1.0, 2.0, 3.0};
  EXPECT_EQ(matvec(identity, v), (Vector<double>{1.0, 2.0, 3.0}));

  const Matrix<double> zero(2, 3);
  EXPECT_EQ(matvec(zero, v), (Vector<double>{0.0, 0.0}));
}

TEST(Matvec, HandArithmetic) {
  Matrix<double> m(2, 2);
  m(0, 0) = 1.0; m(0, 1) = 2.0;
  m(1, 0) = 3.0; m(1, 1) = 4.0;
  EXPECT_EQ(matvec(m, Vector<double>{1.0, 1.0}), (Vector<double>{3.0, 7.0}));
}

TEST(Matvec, DimensionMismatchThrows) {
  const Matrix<double> m(2, 3);
  EXPECT_THROW(matvec(m, Vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST(Matvec, Distributivity) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(6);
    const std::size_t cols = 1 + rng.uniform_index(6);
    Matrix<float> m(rows, cols);
    for (std::size_t i = 0; i < m.size(); ++i) {
      m.data()[i] = static_cast<float>(rng.uniform(-2.0, 2.0));
    }
    Vector<float> u(cols), v(cols), sum(cols);
    for (std::size_t j = 0; j < cols; ++j) {
      u[j] = static_cast<float>(rng.uniform(-2.0, 2.0));
      v[j] = static_cast<float>(rng.uniform(-2.0, 2.0));
      sum[j] = u[j] + v[j];
    }
    const auto lhs = matvec(m, sum);
    const auto mu = matvec(m, u);
    const auto mv = matvec(m, v);
    for (std::size_t i = 0; i < rows; ++i) {
      EXPECT_NEAR(lhs[i], mu[i] + mv[i], 1e-6);
    }
  }
}

TEST(Activations, PointwiseExamples) {
  EXPECT_DOUBLE_EQ(sigmoid(Vector<double>{0.0})[0], 0.5);
  EXPECT_DOUBLE_EQ(tanh(Vector<double>{0.0})[0], 0.0);
  EXPECT_EQ(hadamard(Vector<double>{1.0, 2.0}, Vector<double>{3.0, 4.0}),
            (Vector<double>{3.0, 8.0}));
  EXPECT_THROW(hadamard(Vector<double>{1.0}, Vector<double>{1.0, 2.0}),
               std::invalid_argument);
}

TEST(Activations, Ranges) {
  Rng rng(5);
  Vector<double> v(64);
  for (auto& x : v) x = rng.uniform(-20.0, 20.0);
  for (double s : sigmoid(v)) {
    EXPECT_GT(s, 0.0);
    EXPECT_LT(s, 1.0);
  }
  for (double t : tanh(v)) {
    EXPECT_GT(t, -1.0);
    EXPECT_LT(t, 1.0);
  }
}

TEST(Softmax, UniformAndAnalytic) {
  const auto uniform = softmax(Vector<double>{0.0, 0.0, 0.0});
  for (double p : uniform) EXPECT_NEAR(p, 1.0 / 3.0, 1e-12);

  const auto ratio = softmax(
      Vector<double>{std::log(1.0), std::log(2.0), std::log(3.0)});
  EXPECT_NEAR(ratio[0], 1.0 / 6.0, 1e-12);
  EXPECT_NEAR(ratio[1], 2.0 / 6.0, 1e-12);
  EXPECT_NEAR(ratio[2], 3.0 / 6.0, 1e-12);
}

TEST(Softmax, StableUnderLargeLogits) {
  const auto p = softmax(Vector<double>{1000.0, 0.0});
  EXPECT_NEAR(p[0], 1.0, 1e-12);
  EXPECT_NEAR(p[1], 0.0, 1e-12);
  EXPECT_TRUE(std::isfinite(p[0]));
}

TEST(Softmax, NormalizationAndShiftInvariance) {
  Rng rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(40);
    Vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-30.0, 30.0);
    const auto p = softmax(v);
    double total = 0.0;
    for (double x : p) {
      EXPECT_GT(x, 0.0);
      total += x;
    }
    EXPECT_NEAR(total, 1.0, 1e-6);

    Vector<double> shifted = v;
    const double c = rng.uniform(-10.0, 10.0);
    for (auto& x : shifted) x += c;
    const auto q = softmax(shifted);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(p[i], q[i], 1e-6);
  }
  EXPECT_THROW(softmax(Vector<double>{}), std::invalid_argument);
}

TEST(CrossEntropy, Examples) {
  const auto certain = cross_entropy(Vector<double>{1.0, 0.0, 0.0}, 0);
  EXPECT_NEAR(certain.loss, 0.0, 1e-12);

  const auto uniform =
      cross_entropy(Vector<double>{0.25, 0.25, 0.25, 0.25}, 2);
  EXPECT_NEAR(uniform.loss, std::log(4.0), 1e-12);

  const auto half = cross_entropy(Vector<double>{0.5, 0.5}, 1);
  EXPECT_NEAR(half.loss, std::log(2.0), 1e-12);
  EXPECT_NEAR(half.logit_grad[0], 0.5, 1e-12);
  EXPECT_NEAR(half.logit_grad[1], -0.5, 1e-12);

  EXPECT_THROW(cross_entropy(Vector<double>{1.0}, 3), std::invalid_argument);
}

TEST(CrossEntropy, LogitGradientMatchesFiniteDifferences) {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t n = 2 + rng.uniform_index(49);
    Vector<double> logits(n);
    for (auto& x : logits) x = rng.uniform(-3.0, 3.0);
    const std::size_t target = rng.uniform_index(n);

    const auto analytic = cross_entropy(softmax(logits), target).logit_grad;
    const double err = finite_difference_check(
        [&](const Vector<double>& l) {
          return cross_entropy(softmax(l), target).loss;
        },
        logits, analytic);
    EXPECT_LT(err, 1e-6);
  }
}

TEST(GlorotUniform, BoundAndDeterminism) {
  // b = sqrt(6 / (200 + 300))
  const double bound = std::sqrt(6.0 / 500.0);
  const auto m = glorot_uniform<double>(200, 300, 42);
  for (std::size_t i = 0; i < m.size(); ++i) {
    EXPECT_LT(std::abs(m.data()[i]), bound);
  }
  const auto again = glorot_uniform<double>(200, 300, 42);
  EXPECT_EQ(m, again);

  const auto single = glorot_uniform<double>(1, 1, 3);
  EXPECT_LT(std::abs(single(0, 0)), std::sqrt(3.0));
}

TEST(GlorotUniform, EmpiricalVariance) {
  const auto m = glorot_uniform<double>(100, 100, 7);
  const double bound_sq = 6.0 / 200.0;
  double mean = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) mean += m.data()[i];
  mean /= static_cast<double>(m.size());
  double var = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    var += (m.data()[i] - mean) * (m.data()[i] - mean);
  }
  var /= static_cast<double>(m.size());
  const double expected = bound_sq / 3.0;
  EXPECT_NEAR(var, expected, 0.1 * expected);
}

TEST(FiniteDifferenceCheck, ExactForQuadratic) {
  const Vector<double> p{3.0};
  const Vector<double> grad{6.0};  // d/dp p^2 at p = 3
  const double err = finite_difference_check(
      [](const Vector<double>& x) { return x[0] * x[0]; }, p, grad);
  EXPECT_LT(err, 1e-8);
}

TEST(FiniteDifferenceCheck, SoftmaxCrossEntropyComposite) {
  const Vector<double> logits{0.3, -1.2, 0.7, 2.0, -0.4};
  const auto analytic = cross_entropy(softmax(logits), 3).logit_grad;
  const double err = finite_difference_check(
      [](const Vector<double>& l) {
        return cross_entropy(softmax(l), 3).loss;
      },
      logits, analytic);
  EXPECT_LT(err, 1e-6);
}

TEST(FiniteDifferenceCheck, FlagsWrongGradient) {
  // A gradient scaled by 2 gives |2g - g| / max(|2g|, |g|) = 0.5.
  const Vector<double> p{3.0};
  const Vector<double> doubled{12.0};
  const double err = finite_difference_check(
      [](const Vector<double>& x) { return x[0] * x[0]; }, p, doubled);
  EXPECT_NEAR(err, 0.5, 1e-6);
}

TEST(FiniteDifferenceCheck, RejectsNonFiniteObjective) {
  EXPECT_THROW(finite_difference_check(
                   [](const Vector<double>&) {
                     return std::numeric_limits<double>::infinity();
                   },
                   Vector<double>{1.0}, Vector<double>{0.0}),
               std::runtime_error);
}

TEST(Rng, DeterministicStreams) {
  Rng a(99), b(99);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(a.next_u64(), b.next_u64());
  }
  Rng c(1);
  for (int i = 0; i < 1000; ++i) {
    const double u = c.uniform(-0.1, 0.1);
    EXPECT_GE(u, -0.1);
    EXPECT_LT(u, 0.1);
  }
}

}  // namespace
}  // namespace grumt
