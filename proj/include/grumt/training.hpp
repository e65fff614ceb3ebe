#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <istream>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "grumt/batching.hpp"
#include "grumt/embeddings.hpp"
#include "grumt/gru.hpp"
#include "grumt/numerics.hpp"
#include "grumt/translator.hpp"

namespace grumt {

enum class TrainingMethod {
  teacher_forced,  // prefixes taken from the reference translation
  self_fed,        // prefixes built from the model's own argmax emissions
};

struct TrainingConfig {
  TrainingMethod method = TrainingMethod::teacher_forced;
  std::size_t batch_size = 128;
  std::size_t layers = 4;
  std::size_t hidden_size = 500;
  double learning_rate = 0.01;
  double momentum_coefficient = 0.9;
  double gradient_clip = 100.0;
  std::size_t max_epochs = 1;
  std::uint64_t rng_seed = 1;
  std::size_t checkpoint_interval = 500;  // batches between checkpoints

  void validate() const {
    // Zero is admitted so a zero-step run can pin determinism.
    detail::require(learning_rate >= 0, "config: learning_rate must be >= 0");
    detail::require(momentum_coefficient >= 0 && momentum_coefficient < 1,
                    "config: momentum_coefficient must be in [0, 1)");
    detail::require(gradient_clip > 0, "config: gradient_clip must be > 0");
    detail::require(batch_size >= 1, "config: batch_size must be >= 1");
    detail::require(layers >= 1, "config: layers must be >= 1");
    detail::require(hidden_size >= 1, "config: hidden_size must be >= 1");
    detail::require(max_epochs >= 1, "config: max_epochs must be >= 1");
    detail::require(checkpoint_interval >= 1,
                    "config: checkpoint_interval must be >= 1");
  }
};

// Flat key=value text format, one pair per line; '#' starts a comment.
// Keys mirror the TrainingConfig fields; unknown keys are rejected.
inline TrainingConfig parse_training_config(std::istream& in) {
  TrainingConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t");
    line = line.substr(first, last - first + 1);

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": expected key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t");
      return s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (value.empty()) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": empty value for '" + key + "'");
    }
    try {
      if (key == "method") {
        if (value == "teacher_forced") {
          config.method = TrainingMethod::teacher_forced;
        } else if (value == "self_fed") {
          config.method = TrainingMethod::self_fed;
        } else {
          throw std::runtime_error(
              "method must be teacher_forced or self_fed");
        }
      } else if (key == "batch_size") {
        config.batch_size = std::stoul(value);
      } else if (key == "layers") {
        config.layers = std::stoul(value);
      } else if (key == "hidden_size") {
        config.hidden_size = std::stoul(value);
      } else if (key == "learning_rate") {
        config.learning_rate = std::stod(value);
      } else if (key == "momentum_coefficient") {
        config.momentum_coefficient = std::stod(value);
      } else if (key == "gradient_clip") {
        config.gradient_clip = std::stod(value);
      } else if (key == "max_epochs") {
        config.max_epochs = std::stoul(value);
      } else if (key == "rng_seed") {
        config.rng_seed = std::stoull(value);
      } else if (key == "checkpoint_interval") {
        config.checkpoint_interval = std::stoul(value);
      } else {
        throw std::runtime_error("unknown key '" + key + "'");
      }
    } catch (const std::invalid_argument&) {
      throw std::runtime_error("config line " + std::to_string(line_no) +
                               ": invalid value '" + value + "' for '" + key +
                               "'");
    }
  }
  config.validate();
  return config;
}

template <typename S>
struct BatchLossResult {
  double mean_loss = 0.0;       // mean cross-entropy over pairs x positions
  ModelParams<S> gradients;
};

namespace detail {

// Shared loss core for the two training methods. They differ only in which
// token extends the prefix: the ground truth or the model's own argmax.
// The re-embedded prediction enters as a constant input; gradients flow
// through the recurrent states only.
template <typename S>
BatchLossResult<S> batch_loss(const Batch& batch, const ModelParams<S>& params,
                              const EmbeddingTable<S>& src_table,
                              const EmbeddingTable<S>& tgt_table,
                              TrainingMethod method) {
  const std::size_t batch_cols = batch.size();
  const std::size_t source_len = batch.source_len;
  const std::size_t target_len = batch.target_len;
  require(batch_cols >= 1, "batch_loss: empty batch");
  require(source_len >= 1 && target_len >= 1,
          "batch_loss: zero-length sequences");
  require(src_table.dim == params.input_size && tgt_table.dim == params.input_size,
          "batch_loss: embedding dim does not match model input size");
  for (const auto& pair : batch.pairs) {
    require(pair.source.length() == source_len &&
                pair.target.length() == target_len,
            "batch_loss: ragged batch");
  }

  auto embed_column_batch = [&](const EmbeddingTable<S>& table,
                                auto id_of_pair) {
    Matrix<S> x(params.input_size, batch_cols);
    for (std::size_t b = 0; b < batch_cols; ++b) {
      const auto row = table.row(id_of_pair(b));
      for (std::size_t i = 0; i < params.input_size; ++i) x(i, b) = row[i];
    }
    return x;
  };

  SequenceRun<S> run(params, batch_cols);
  for (std::size_t t = 0; t < source_len; ++t) {
    run.step(embed_column_batch(
        src_table, [&](std::size_t b) { return batch.pairs[b].source.ids[t]; }));
  }

  const std::size_t vocab = params.vocab_ids();
  const double scale = 1.0 / static_cast<double>(batch_cols * target_len);
  double loss_sum = 0.0;
  std::vector<StepLogitGrad<S>> logit_grads;
  logit_grads.reserve(target_len);
  std::vector<TokenId> predictions(batch_cols);

  for (std::size_t j = 0; j < target_len; ++j) {
    const Matrix<S> logits = run.logits();
    StepLogitGrad<S> lg;
    lg.step = run.steps() - 1;
    lg.grad = Matrix<S>(vocab, batch_cols);
    for (std::size_t b = 0; b < batch_cols; ++b) {
      Vector<S> column(vocab);
      for (std::size_t i = 0; i < vocab; ++i) column[i] = logits(i, b);
      const Vector<S> probs = softmax(column);
      const TokenId truth = batch.pairs[b].target.ids[j];
      require(truth < vocab, "batch_loss: target id outside vocabulary");
      loss_sum -= std::log(
          std::max(static_cast<double>(probs[truth]), kProbFloor));
      for (std::size_t i = 0; i < vocab; ++i) {
        lg.grad(i, b) = static_cast<S>(probs[i] * scale);
      }
      lg.grad(truth, b) -= static_cast<S>(scale);
      predictions[b] = static_cast<TokenId>(argmax_lowest(probs));
    }
    logit_grads.push_back(std::move(lg));

    if (j + 1 < target_len) {
      run.step(embed_column_batch(tgt_table, [&](std::size_t b) {
        return method == TrainingMethod::teacher_forced
                   ? batch.pairs[b].target.ids[j]
                   : predictions[b];
      }));
    }
  }

  BatchLossResult<S> result;
  result.mean_loss = loss_sum * scale;
  result.gradients = backward_run(run.tape(), params, logit_grads);
  return result;
}

}  // namespace detail

// Position k's classifier input is the source plus the correct prefix
// y_1..y_k; the expected class is y_{k+1}. One forward pass covers every
// position because the prefixes nest.
template <typename S>
BatchLossResult<S> batch_loss_teacher_forced(
    const Batch& batch, const ModelParams<S>& params,
    const EmbeddingTable<S>& src_table, const EmbeddingTable<S>& tgt_table) {
  return detail::batch_loss(batch, params, src_table, tgt_table,
                            TrainingMethod::teacher_forced);
}

// Prefixes are the model's own argmax emissions; the loss is still scored
// against the ground truth at every position.
template <typename S>
BatchLossResult<S> batch_loss_self_fed(const Batch& batch,
                                       const ModelParams<S>& params,
                                       const EmbeddingTable<S>& src_table,
                                       const EmbeddingTable<S>& tgt_table) {
  return detail::batch_loss(batch, params, src_table, tgt_table,
                            TrainingMethod::self_fed);
}

// Element-wise hard clamp of every gradient component to [-limit, +limit].
template <typename S>
void clip_gradients(ModelParams<S>& grads, S limit) {
  detail::require(limit > S{0}, "clip_gradients: limit must be > 0");
  visit_param_data(grads, [limit](std::span<S> block) {
    for (auto& g : block) {
      if (g > limit) g = limit;
      if (g < -limit) g = -limit;
    }
  });
}

// Velocity buffers mirroring the parameter shapes.
template <typename S>
struct OptimizerState {
  ModelParams<S> velocity;
};

// Nesterov momentum in its common reformulation:
//   v <- mu v - lr g
//   p <- p + mu v - lr g
// with g evaluated at the current parameters.
template <typename S>
void nesterov_step(ModelParams<S>& params, const ModelParams<S>& grads,
                   OptimizerState<S>& state, double lr, double mu) {
  std::vector<std::span<S>> pb, vb;
  std::vector<std::span<const S>> gb;
  visit_param_data(params, [&](std::span<S> b) { pb.push_back(b); });
  visit_param_data(state.velocity, [&](std::span<S> b) { vb.push_back(b); });
  visit_param_data(grads, [&](std::span<const S> b) { gb.push_back(b); });
  detail::require(pb.size() == gb.size() && pb.size() == vb.size(),
                  "nesterov_step: structure mismatch");
  for (std::size_t k = 0; k < pb.size(); ++k) {
    detail::require(pb[k].size() == gb[k].size() &&
                        pb[k].size() == vb[k].size(),
                    "nesterov_step: shape mismatch");
    for (std::size_t i = 0; i < pb[k].size(); ++i) {
      const S g = gb[k][i];
      vb[k][i] = static_cast<S>(mu * vb[k][i] - lr * g);
      pb[k][i] += static_cast<S>(mu * vb[k][i] - lr * g);
    }
  }
}

struct BatchRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t batch = 0;  // 0-based index within the epoch's shuffled order
  double loss = 0.0;
  std::int64_t millis = 0;
};

struct EpochSummary {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  std::int64_t millis = 0;
};

struct TrainingLog {
  std::vector<BatchRecord> records;
  std::vector<EpochSummary> epochs;
};

// One comma-separated record per batch.
inline void write_training_log(const TrainingLog& log, std::ostream& out) {
  out << "epoch,batch,loss,millis\n";
  for (const auto& r : log.records) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", r.loss);
    out << r.epoch << ',' << r.batch << ',' << buf << ',' << r.millis << '\n';
  }
}

template <typename S>
struct TrainResult {
  ModelParams<S> params;
  OptimizerState<S> opt_state;
  TrainingLog log;
};

// Called after the update that completes a checkpoint interval and at every
// epoch boundary.
template <typename S>
using CheckpointFn =
    std::function<void(const ModelParams<S>&, const OptimizerState<S>&,
                       std::size_t /*epoch*/, std::size_t /*batch*/)>;

// Trains from a fresh Glorot initialization. Identical config, batches,
// and tables give bitwise-identical parameters and losses.
template <typename S>
TrainResult<S> train(const TrainingConfig& config,
                     const std::vector<Batch>& batches,
                     const EmbeddingTable<S>& src_table,
                     const EmbeddingTable<S>& tgt_table,
                     const CheckpointFn<S>& checkpoint = nullptr) {
  config.validate();
  if (batches.empty()) {
    throw std::invalid_argument("train: batch list is empty");
  }
  detail::require(src_table.dim == tgt_table.dim,
                  "train: source and target embedding dims differ");
  for (const auto& batch : batches) {
    detail::require(batch.size() == config.batch_size,
                    "train: batch size " + std::to_string(batch.size()) +
                        " does not match config batch_size " +
                        std::to_string(config.batch_size));
  }

  Rng rng(config.rng_seed);
  ModelParams<S> params =
      init_model<S>(config.layers, config.hidden_size, src_table.dim,
                    tgt_table.vectors.rows(), rng);
  OptimizerState<S> opt{zeros_like(params)};
  TrainingLog log;

  auto assert_velocity_finite = [&](std::size_t epoch, std::size_t batch) {
    visit_param_data(opt.velocity, [&](std::span<const S> block) {
      for (S v : block) {
        if (!std::isfinite(static_cast<double>(v))) {
          throw std::runtime_error(
              "train: non-finite velocity at epoch " + std::to_string(epoch) +
              " batch " + std::to_string(batch));
        }
      }
    });
  };

  std::vector<std::size_t> order(batches.size());
  std::iota(order.begin(), order.end(), 0);
  std::size_t steps_since_checkpoint = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    rng.shuffle(order);
    const auto epoch_start = std::chrono::steady_clock::now();
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < order.size(); ++b) {
      const auto batch_start = std::chrono::steady_clock::now();
      auto result = detail::batch_loss(batches[order[b]], params, src_table,
                                       tgt_table, config.method);
      if (!std::isfinite(result.mean_loss)) {
        throw std::runtime_error(
            "train: non-finite loss at epoch " + std::to_string(epoch) +
            " batch " + std::to_string(b));
      }
      clip_gradients(result.gradients, static_cast<S>(config.gradient_clip));
      nesterov_step(params, result.gradients, opt, config.learning_rate,
                    config.momentum_coefficient);
      const auto batch_end = std::chrono::steady_clock::now();
      log.records.push_back(
          {epoch, b, result.mean_loss,
           std::chrono::duration_cast<std::chrono::milliseconds>(batch_end -
                                                                 batch_start)
               .count()});
      epoch_loss += result.mean_loss;
      if (++steps_since_checkpoint == config.checkpoint_interval) {
        steps_since_checkpoint = 0;
        assert_velocity_finite(epoch, b);
        if (checkpoint) checkpoint(params, opt, epoch, b);
      }
    }
    const auto epoch_end = std::chrono::steady_clock::now();
    log.epochs.push_back(
        {epoch, epoch_loss / static_cast<double>(order.size()),
         std::chrono::duration_cast<std::chrono::milliseconds>(epoch_end -
                                                               epoch_start)
             .count()});
    assert_velocity_finite(epoch, order.size());
    if (checkpoint) checkpoint(params, opt, epoch, order.size());
  }
  return {std::move(params), std::move(opt), std::move(log)};
}

}  // namespace grumt
