#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "grumt/gru.hpp"
#include "grumt/numerics.hpp"
#include "grumt/rng.hpp"

namespace grumt {

struct GradCheckReport {
  std::size_t instances = 0;
  double max_rel_error = 0.0;
  double threshold = 1e-5;

  bool passed() const { return max_rel_error < threshold; }
};

namespace detail {

// Richardson-extrapolated central differences: (4 D(eps/2) - D(eps)) / 3
// per coordinate, which cancels the quadratic truncation term. Plain
// central differences cannot certify 1e-5 here: coordinates whose gradient
// sits near the 1e-8 comparison floor are roundoff-bound at small steps
// and truncation-bound at large ones. A wrong gradient still fails this
// estimator at any step size by orders of magnitude.
template <typename F>
double extrapolated_difference_error(F&& f, Vector<double> params,
                                     const Vector<double>& analytic,
                                     double epsilon) {
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double saved = params[i];
    auto central = [&](double eps) {
      params[i] = saved + eps;
      const double up = f(params);
      params[i] = saved - eps;
      const double down = f(params);
      params[i] = saved;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw std::runtime_error("gradcheck: objective is not finite");
      }
      return (up - down) / (2.0 * eps);
    };
    const double coarse = central(epsilon);
    const double fine = central(epsilon / 2.0);
    const double numeric = (4.0 * fine - coarse) / 3.0;
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace detail

// Checks backpropagation through time against numerical differentiation on
// random small model instances (64-bit path): a cross-entropy loss at the
// final step of a random sequence, differentiated with respect to every
// parameter.
inline GradCheckReport run_gradcheck(std::uint64_t seed,
                                     std::size_t instances = 100,
                                     double threshold = 1e-5,
                                     double epsilon = 1e-2) {
  detail::require(instances >= 1, "run_gradcheck: instances must be >= 1");
  Rng rng(seed);
  GradCheckReport report;
  report.instances = instances;
  report.threshold = threshold;

  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t steps = 1 + rng.uniform_index(4);
    const std::size_t layer_count = 1 + rng.uniform_index(2);
    const std::size_t hidden = 2 + rng.uniform_index(5);
    const std::size_t vocab = 2 + rng.uniform_index(7);
    const std::size_t input = 2 + rng.uniform_index(4);

    ModelParams<double> params =
        init_model<double>(layer_count, hidden, input, vocab, rng);
    std::vector<Vector<double>> inputs(steps, Vector<double>(input));
    for (auto& x : inputs) {
      for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    }
    const std::size_t target = rng.uniform_index(vocab);

    const auto fwd = forward_sequence(inputs, params);
    const auto ce = cross_entropy(softmax(fwd.logits), target);
    const ModelParams<double> analytic =
        backward_sequence(fwd.tape, ce.logit_grad, params);

    ModelParams<double> scratch = params;
    const double err = detail::extrapolated_difference_error(
        [&](const Vector<double>& values) {
          unflatten_params(std::span<const double>(values), scratch);
          const auto run = forward_sequence(inputs, scratch);
          return static_cast<double>(
              cross_entropy(softmax(run.logits), target).loss);
        },
        flatten_params(params), flatten_params(analytic), epsilon);
    if (err > report.max_rel_error) report.max_rel_error = err;
  }
  return report;
}

}  // namespace grumt
