#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grumt/matrix.hpp"
#include "grumt/numerics.hpp"
#include "grumt/rng.hpp"

namespace grumt {

// One recurrent layer. W/U feed the candidate activation, Wz/Uz the update
// gate, Wv/Uv the reset gate. The gate equations carry no bias terms; the
// only bias in the model sits on the output projection.
template <typename S>
struct GruLayerParams {
  Matrix<S> W, U;    // candidate: tanh(W x + U (r . h_prev))
  Matrix<S> Wz, Uz;  // update gate z
  Matrix<S> Wv, Uv;  // reset gate r
};

template <typename S>
struct ModelParams {
  std::vector<GruLayerParams<S>> layers;
  Matrix<S> output_weight;  // (target vocab id count x hidden)
  Vector<S> output_bias;    // target vocab id count
  std::size_t hidden_size = 0;
  std::size_t input_size = 0;

  std::size_t layer_count() const { return layers.size(); }
  std::size_t vocab_ids() const { return output_weight.rows(); }
  std::size_t layer_input_size(std::size_t layer) const {
    return layer == 0 ? input_size : hidden_size;
  }
};

// Yields every parameter block in the canonical order: per layer W, U,
// W_z, U_z, W_v, U_v, then the output weight and bias. The checkpoint
// format, flattening, clipping, and the optimizer all share this order.
template <typename S, typename Fn>
void visit_param_data(ModelParams<S>& p, Fn&& fn) {
  for (auto& l : p.layers) {
    fn(std::span<S>(l.W.data(), l.W.size()));
    fn(std::span<S>(l.U.data(), l.U.size()));
    fn(std::span<S>(l.Wz.data(), l.Wz.size()));
    fn(std::span<S>(l.Uz.data(), l.Uz.size()));
    fn(std::span<S>(l.Wv.data(), l.Wv.size()));
    fn(std::span<S>(l.Uv.data(), l.Uv.size()));
  }
  fn(std::span<S>(p.output_weight.data(), p.output_weight.size()));
  fn(std::span<S>(p.output_bias.data(), p.output_bias.size()));
}

template <typename S, typename Fn>
void visit_param_data(const ModelParams<S>& p, Fn&& fn) {
  visit_param_data(const_cast<ModelParams<S>&>(p),
                   [&fn](std::span<S> block) {
                     fn(std::span<const S>(block.data(), block.size()));
                   });
}

template <typename S>
ModelParams<S> zeros_like(const ModelParams<S>& p) {
  ModelParams<S> z;
  z.hidden_size = p.hidden_size;
  z.input_size = p.input_size;
  z.layers.resize(p.layers.size());
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    const auto& src = p.layers[l];
    auto& dst = z.layers[l];
    dst.W = Matrix<S>(src.W.rows(), src.W.cols());
    dst.U = Matrix<S>(src.U.rows(), src.U.cols());
    dst.Wz = Matrix<S>(src.Wz.rows(), src.Wz.cols());
    dst.Uz = Matrix<S>(src.Uz.rows(), src.Uz.cols());
    dst.Wv = Matrix<S>(src.Wv.rows(), src.Wv.cols());
    dst.Uv = Matrix<S>(src.Uv.rows(), src.Uv.cols());
  }
  z.output_weight = Matrix<S>(p.output_weight.rows(), p.output_weight.cols());
  z.output_bias = Vector<S>(p.output_bias.size(), S{0});
  return z;
}

// Glorot-uniform weights, zero output bias. Matrices are drawn in the
// canonical parameter order from the single generator, so a seed pins the
// whole model.
template <typename S>
ModelParams<S> init_model(std::size_t layer_count, std::size_t hidden_size,
                          std::size_t input_size, std::size_t vocab_ids,
                          Rng& rng) {
  detail::require(layer_count >= 1 && hidden_size >= 1 && input_size >= 1 &&
                      vocab_ids >= 1,
                  "init_model: all dimensions must be >= 1");
  ModelParams<S> p;
  p.hidden_size = hidden_size;
  p.input_size = input_size;
  p.layers.resize(layer_count);
  for (std::size_t l = 0; l < layer_count; ++l) {
    const std::size_t in = (l == 0) ? input_size : hidden_size;
    p.layers[l].W = glorot_uniform<S>(hidden_size, in, rng);
    p.layers[l].U = glorot_uniform<S>(hidden_size, hidden_size, rng);
    p.layers[l].Wz = glorot_uniform<S>(hidden_size, in, rng);
    p.layers[l].Uz = glorot_uniform<S>(hidden_size, hidden_size, rng);
    p.layers[l].Wv = glorot_uniform<S>(hidden_size, in, rng);
    p.layers[l].Uv = glorot_uniform<S>(hidden_size, hidden_size, rng);
  }
  p.output_weight = glorot_uniform<S>(vocab_ids, hidden_size, rng);
  p.output_bias = Vector<S>(vocab_ids, S{0});
  return p;
}

template <typename S>
ModelParams<S> init_model(std::size_t layer_count, std::size_t hidden_size,
                          std::size_t input_size, std::size_t vocab_ids,
                          std::uint64_t seed) {
  Rng rng(seed);
  return init_model<S>(layer_count, hidden_size, input_size, vocab_ids, rng);
}

template <typename S>
Vector<S> flatten_params(const ModelParams<S>& p) {
  Vector<S> flat;
  visit_param_data(p, [&flat](std::span<const S> block) {
    flat.insert(flat.end(), block.begin(), block.end());
  });
  return flat;
}

template <typename S>
void unflatten_params(std::span<const S> flat, ModelParams<S>& p) {
  std::size_t offset = 0;
  visit_param_data(p, [&](std::span<S> block) {
    if (offset + block.size() > flat.size()) {
      throw std::invalid_argument("unflatten_params: too few values");
    }
    std::copy(flat.begin() + offset, flat.begin() + offset + block.size(),
              block.begin());
    offset += block.size();
  });
  if (offset != flat.size()) {
    throw std::invalid_argument("unflatten_params: too many values");
  }
}

// Per-layer activations for one sequence position.
template <typename S>
struct HiddenState {
  std::vector<Vector<S>> layers;

  static HiddenState zeros(std::size_t layer_count, std::size_t hidden_size) {
    HiddenState h;
    h.layers.assign(layer_count, Vector<S>(hidden_size, S{0}));
    return h;
  }
};

template <typename S>
struct GruCellResult {
  Vector<S> h_new;
  Vector<S> z, r, h_cand;  // cached gate values for the backward pass
};

// One GRU step:
//   z = sigmoid(Wz x + Uz h_prev)
//   r = sigmoid(Wv x + Uv h_prev)
//   h_cand = tanh(W x + U (r . h_prev))
//   h_new = z . h_prev + (1 - z) . h_cand
template <typename S>
GruCellResult<S> gru_cell_forward(const Vector<S>& x, const Vector<S>& h_prev,
                                  const GruLayerParams<S>& p) {
  detail::require(p.W.cols() == x.size() && p.U.cols() == h_prev.size(),
                  "gru_cell_forward: dimension mismatch");
  GruCellResult<S> out;
  Vector<S> az = matvec(p.Wz, x);
  Vector<S> uzh = matvec(p.Uz, h_prev);
  Vector<S> ar = matvec(p.Wv, x);
  Vector<S> uvh = matvec(p.Uv, h_prev);
  const std::size_t n = h_prev.size();
  out.z.resize(n);
  out.r.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.z[i] = sigmoid_scalar(az[i] + uzh[i]);
    out.r[i] = sigmoid_scalar(ar[i] + uvh[i]);
  }
  Vector<S> rh(n);
  for (std::size_t i = 0; i < n; ++i) rh[i] = out.r[i] * h_prev[i];
  Vector<S> ah = matvec(p.W, x);
  Vector<S> urh = matvec(p.U, rh);
  out.h_cand.resize(n);
  out.h_new.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.h_cand[i] = std::tanh(ah[i] + urh[i]);
    out.h_new[i] = out.z[i] * h_prev[i] + (S{1} - out.z[i]) * out.h_cand[i];
  }
  return out;
}

// Advances every layer of the stack by one input vector, in place.
template <typename S>
void advance_hidden(HiddenState<S>& state, const Vector<S>& x,
                    const ModelParams<S>& params) {
  const Vector<S>* layer_input = &x;
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    state.layers[l] =
        gru_cell_forward(*layer_input, state.layers[l], params.layers[l])
            .h_new;
    layer_input = &state.layers[l];
  }
}

template <typename S>
Vector<S> logits_from_hidden(const HiddenState<S>& state,
                             const ModelParams<S>& params) {
  Vector<S> logits = matvec(params.output_weight, state.layers.back());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] += params.output_bias[i];
  }
  return logits;
}

// ---------------------------------------------------------------------------
// Batched execution. Activations are (hidden x batch) matrices; a batch of
// sequences sharing one shape runs in lockstep through matrix-matrix
// products. Single-sequence execution is the one-column case.

template <typename S>
struct StepGates {
  Matrix<S> z, r, h_cand;  // each (hidden x batch)
};

// Everything the backward pass needs from a forward run.
template <typename S>
struct StepTape {
  std::vector<Matrix<S>> inputs;                 // inputs[t] (in x batch)
  std::vector<std::vector<Matrix<S>>> hidden;    // hidden[t][layer]
  std::vector<std::vector<StepGates<S>>> gates;  // gates[t][layer]
  std::vector<Matrix<S>> initial;                // per layer (hidden x batch)
  std::size_t batch_cols = 0;

  std::size_t steps() const { return inputs.size(); }
  std::size_t layer_count() const { return initial.size(); }
};

namespace detail {

template <typename S>
Matrix<S> gru_layer_forward_batch(const Matrix<S>& x, const Matrix<S>& h_prev,
                                  const GruLayerParams<S>& p,
                                  StepGates<S>& gates) {
  gates.z = matmul(p.Wz, x);
  add_matmul(gates.z, p.Uz, h_prev);
  sigmoid_inplace(gates.z);

  gates.r = matmul(p.Wv, x);
  add_matmul(gates.r, p.Uv, h_prev);
  sigmoid_inplace(gates.r);

  Matrix<S> rh(h_prev.rows(), h_prev.cols());
  for (std::size_t i = 0; i < rh.size(); ++i) {
    rh.data()[i] = gates.r.data()[i] * h_prev.data()[i];
  }
  gates.h_cand = matmul(p.W, x);
  add_matmul(gates.h_cand, p.U, rh);
  tanh_inplace(gates.h_cand);

  Matrix<S> h_new(h_prev.rows(), h_prev.cols());
  for (std::size_t i = 0; i < h_new.size(); ++i) {
    const S z = gates.z.data()[i];
    h_new.data()[i] =
        z * h_prev.data()[i] + (S{1} - z) * gates.h_cand.data()[i];
  }
  return h_new;
}

}  // namespace detail

// Incremental batched forward pass that records the tape as it goes, so
// later inputs may depend on earlier outputs (self-fed training, decoding).
template <typename S>
class SequenceRun {
 public:
  SequenceRun(const ModelParams<S>& params, std::size_t batch_cols)
      : params_(&params) {
    tape_.batch_cols = batch_cols;
    tape_.initial.assign(params.layer_count(),
                         Matrix<S>(params.hidden_size, batch_cols));
  }

  SequenceRun(const ModelParams<S>& params, std::vector<Matrix<S>> initial)
      : params_(&params) {
    detail::require(initial.size() == params.layer_count(),
                    "SequenceRun: initial state layer mismatch");
    tape_.batch_cols = initial.empty() ? 0 : initial[0].cols();
    tape_.initial = std::move(initial);
  }

  void step(Matrix<S> input) {
    detail::require(input.rows() == params_->input_size &&
                        input.cols() == tape_.batch_cols,
                    "SequenceRun::step: input shape mismatch");
    const std::size_t layer_count = params_->layer_count();
    std::vector<Matrix<S>> new_hidden(layer_count);
    std::vector<StepGates<S>> new_gates(layer_count);
    const Matrix<S>* layer_input = &input;
    for (std::size_t l = 0; l < layer_count; ++l) {
      const Matrix<S>& h_prev = tape_.hidden.empty()
                                    ? tape_.initial[l]
                                    : tape_.hidden.back()[l];
      new_hidden[l] = detail::gru_layer_forward_batch(
          *layer_input, h_prev, params_->layers[l], new_gates[l]);
      layer_input = &new_hidden[l];
    }
    tape_.inputs.push_back(std::move(input));
    tape_.hidden.push_back(std::move(new_hidden));
    tape_.gates.push_back(std::move(new_gates));
  }

  std::size_t steps() const { return tape_.steps(); }

  const Matrix<S>& top_hidden() const {
    detail::require(!tape_.hidden.empty(), "SequenceRun: no steps taken");
    return tape_.hidden.back().back();
  }

  // output_weight . h_top + bias, per batch column.
  Matrix<S> logits() const {
    Matrix<S> out = matmul(params_->output_weight, top_hidden());
    for (std::size_t i = 0; i < out.rows(); ++i) {
      S* row = out.data() + i * out.cols();
      const S b = params_->output_bias[i];
      for (std::size_t j = 0; j < out.cols(); ++j) row[j] += b;
    }
    return out;
  }

  StepTape<S> take_tape() { return std::move(tape_); }
  const StepTape<S>& tape() const { return tape_; }

 private:
  const ModelParams<S>* params_;
  StepTape<S> tape_;
};

template <typename S>
struct ForwardResult {
  HiddenState<S> final_state;
  Vector<S> logits;  // at the final step
  StepTape<S> tape;
};

// Runs the whole stack over an input sequence. The input must contain at
// least one vector; a prediction needs at least one step.
template <typename S>
ForwardResult<S> forward_sequence(const std::vector<Vector<S>>& inputs,
                                  const ModelParams<S>& params,
                                  const HiddenState<S>& initial) {
  if (inputs.empty()) {
    throw std::invalid_argument("forward_sequence: empty input sequence");
  }
  detail::require(initial.layers.size() == params.layer_count(),
                  "forward_sequence: initial state layer mismatch");
  std::vector<Matrix<S>> init_cols;
  init_cols.reserve(initial.layers.size());
  for (const auto& h : initial.layers) {
    Matrix<S> col(params.hidden_size, 1);
    detail::require(h.size() == params.hidden_size,
                    "forward_sequence: initial state size mismatch");
    for (std::size_t i = 0; i < h.size(); ++i) col(i, 0) = h[i];
    init_cols.push_back(std::move(col));
  }
  SequenceRun<S> run(params, std::move(init_cols));
  for (const auto& x : inputs) {
    detail::require(x.size() == params.input_size,
                    "forward_sequence: input vector size mismatch");
    Matrix<S> col(params.input_size, 1);
    for (std::size_t i = 0; i < x.size(); ++i) col(i, 0) = x[i];
    run.step(std::move(col));
  }
  ForwardResult<S> result;
  Matrix<S> logit_col = run.logits();
  result.logits.resize(logit_col.rows());
  for (std::size_t i = 0; i < logit_col.rows(); ++i) {
    result.logits[i] = logit_col(i, 0);
  }
  result.tape = run.take_tape();
  result.final_state.layers.resize(params.layer_count());
  for (std::size_t l = 0; l < params.layer_count(); ++l) {
    const Matrix<S>& h = result.tape.hidden.back()[l];
    result.final_state.layers[l].resize(params.hidden_size);
    for (std::size_t i = 0; i < params.hidden_size; ++i) {
      result.final_state.layers[l][i] = h(i, 0);
    }
  }
  return result;
}

template <typename S>
ForwardResult<S> forward_sequence(const std::vector<Vector<S>>& inputs,
                                  const ModelParams<S>& params) {
  return forward_sequence(
      inputs, params,
      HiddenState<S>::zeros(params.layer_count(), params.hidden_size));
}

namespace detail {

// Reverse-mode step for one layer at one timestep. dh carries the loss
// gradient flowing into h_new; on return it holds the gradient into
// h_prev. Both additive paths through the blend (z . h_prev directly and
// r . h_prev inside the candidate) accumulate.
template <typename S>
void gru_layer_backward_batch(const Matrix<S>& x, const Matrix<S>& h_prev,
                              const StepGates<S>& gates,
                              const GruLayerParams<S>& p,
                              GruLayerParams<S>& grad, Matrix<S>& dh,
                              Matrix<S>* dx) {
  const std::size_t n = dh.size();
  const Matrix<S>& z = gates.z;
  const Matrix<S>& r = gates.r;
  const Matrix<S>& cand = gates.h_cand;

  Matrix<S> da_h(dh.rows(), dh.cols());
  Matrix<S> dz(dh.rows(), dh.cols());
  Matrix<S> dh_prev(dh.rows(), dh.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const S g = dh.data()[i];
    const S zi = z.data()[i];
    const S ci = cand.data()[i];
    dz.data()[i] = g * (h_prev.data()[i] - ci);
    da_h.data()[i] = g * (S{1} - zi) * (S{1} - ci * ci);
    dh_prev.data()[i] = g * zi;
  }

  add_matmul_abt(grad.W, da_h, x);
  Matrix<S> rh(h_prev.rows(), h_prev.cols());
  for (std::size_t i = 0; i < n; ++i) {
    rh.data()[i] = r.data()[i] * h_prev.data()[i];
  }
  add_matmul_abt(grad.U, da_h, rh);

  Matrix<S> drh = matmul_atb(p.U, da_h);
  Matrix<S> da_r(dh.rows(), dh.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const S ri = r.data()[i];
    dh_prev.data()[i] += drh.data()[i] * ri;
    da_r.data()[i] = drh.data()[i] * h_prev.data()[i] * ri * (S{1} - ri);
  }
  add_matmul_abt(grad.Wv, da_r, x);
  add_matmul_abt(grad.Uv, da_r, h_prev);
  add_matmul_atb(dh_prev, p.Uv, da_r);

  Matrix<S> da_z(dh.rows(), dh.cols());
  for (std::size_t i = 0; i < n; ++i) {
    const S zi = z.data()[i];
    da_z.data()[i] = dz.data()[i] * zi * (S{1} - zi);
  }
  add_matmul_abt(grad.Wz, da_z, x);
  add_matmul_abt(grad.Uz, da_z, h_prev);
  add_matmul_atb(dh_prev, p.Uz, da_z);

  if (dx != nullptr) {
    add_matmul_atb(*dx, p.W, da_h);
    add_matmul_atb(*dx, p.Wv, da_r);
    add_matmul_atb(*dx, p.Wz, da_z);
  }
  dh = std::move(dh_prev);
}

}  // namespace detail

// Loss gradient with respect to the output logits at one step of the run.
template <typename S>
struct StepLogitGrad {
  std::size_t step = 0;
  Matrix<S> grad;  // (vocab x batch)
};

// Backpropagation through time over a recorded tape. Accepts logit
// gradients at any subset of steps (ordered by step) and accumulates exact
// reverse-mode gradients for every parameter.
template <typename S>
ModelParams<S> backward_run(const StepTape<S>& tape,
                            const ModelParams<S>& params,
                            const std::vector<StepLogitGrad<S>>& logit_grads) {
  const std::size_t layer_count = params.layer_count();
  detail::require(tape.layer_count() == layer_count,
                  "backward_run: tape/params layer mismatch");
  for (const auto& lg : logit_grads) {
    detail::require(lg.step < tape.steps(), "backward_run: step out of range");
    detail::require(lg.grad.rows() == params.vocab_ids() &&
                        lg.grad.cols() == tape.batch_cols,
                    "backward_run: logit gradient shape mismatch");
  }

  ModelParams<S> grads = zeros_like(params);
  std::vector<Matrix<S>> dh(
      layer_count, Matrix<S>(params.hidden_size, tape.batch_cols));

  std::size_t next_grad = logit_grads.size();
  for (std::size_t t = tape.steps(); t-- > 0;) {
    while (next_grad > 0 && logit_grads[next_grad - 1].step == t) {
      const Matrix<S>& dlogits = logit_grads[next_grad - 1].grad;
      const Matrix<S>& h_top = tape.hidden[t][layer_count - 1];
      add_matmul_abt(grads.output_weight, dlogits, h_top);
      for (std::size_t i = 0; i < dlogits.rows(); ++i) {
        const S* row = dlogits.data() + i * dlogits.cols();
        S acc{0};
        for (std::size_t j = 0; j < dlogits.cols(); ++j) acc += row[j];
        grads.output_bias[i] += acc;
      }
      add_matmul_atb(dh[layer_count - 1], params.output_weight, dlogits);
      --next_grad;
    }
    for (std::size_t l = layer_count; l-- > 0;) {
      const Matrix<S>& x = (l == 0) ? tape.inputs[t] : tape.hidden[t][l - 1];
      const Matrix<S>& h_prev =
          (t == 0) ? tape.initial[l] : tape.hidden[t - 1][l];
      Matrix<S>* dx = (l == 0) ? nullptr : &dh[l - 1];
      detail::gru_layer_backward_batch(x, h_prev, tape.gates[t][l],
                                       params.layers[l], grads.layers[l],
                                       dh[l], dx);
    }
  }
  return grads;
}

// Single-sequence backward pass for a loss applied at the final step only.
template <typename S>
ModelParams<S> backward_sequence(const StepTape<S>& tape,
                                 const Vector<S>& logit_gradient,
                                 const ModelParams<S>& params) {
  detail::require(tape.batch_cols == 1,
                  "backward_sequence: expected a single-sequence tape");
  detail::require(tape.steps() >= 1, "backward_sequence: empty tape");
  StepLogitGrad<S> lg;
  lg.step = tape.steps() - 1;
  lg.grad = Matrix<S>(logit_gradient.size(), 1);
  for (std::size_t i = 0; i < logit_gradient.size(); ++i) {
    lg.grad(i, 0) = logit_gradient[i];
  }
  std::vector<StepLogitGrad<S>> grads;
  grads.push_back(std::move(lg));
  return backward_run(tape, params, grads);
}

}  // namespace grumt
