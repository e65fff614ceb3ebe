#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "grumt/embeddings.hpp"
#include "grumt/gru.hpp"
#include "grumt/numerics.hpp"
#include "grumt/vocab.hpp"

namespace grumt {

// Deterministic argmax: ties go to the lowest id.
template <typename S>
std::size_t argmax_lowest(std::span<const S> values) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > values[best]) best = i;
  }
  return best;
}

template <typename S>
std::size_t argmax_lowest(const Vector<S>& values) {
  return argmax_lowest(std::span<const S>(values.data(), values.size()));
}

namespace detail {

template <typename S>
Vector<S> to_vector(std::span<const S> row) {
  return Vector<S>(row.begin(), row.end());
}

}  // namespace detail

// One in-progress decode. The hidden state caches the network's position
// after consuming the source and every emitted token, so each further step
// costs a single forward step instead of a full re-run.
template <typename S>
struct DecodeState {
  std::vector<TokenId> emitted_ids;
  double cumulative_log_prob = 0.0;
  HiddenState<S> hidden;

  static DecodeState start(const TokenSequence& source,
                           const ModelParams<S>& params,
                           const EmbeddingTable<S>& src_table) {
    if (source.ids.empty()) {
      throw std::invalid_argument("decode: source sequence is empty");
    }
    DecodeState state;
    state.hidden =
        HiddenState<S>::zeros(params.layer_count(), params.hidden_size);
    for (TokenId id : source.ids) {
      advance_hidden(state.hidden, detail::to_vector(src_table.row(id)),
                     params);
    }
    return state;
  }

  Vector<S> distribution(const ModelParams<S>& params) const {
    return softmax(logits_from_hidden(hidden, params));
  }

  void advance(TokenId id, double log_prob, const ModelParams<S>& params,
               const EmbeddingTable<S>& tgt_table) {
    emitted_ids.push_back(id);
    cumulative_log_prob += log_prob;
    advance_hidden(hidden, detail::to_vector(tgt_table.row(id)), params);
  }
};

// Probability of each candidate next target word given the source sentence
// and the translation so far. The classifier input is the source embedding
// sequence (its EOS marks the boundary) followed by the partial-target
// embeddings, as one recurrent stream; the distribution is the softmax of
// the final-step logits.
template <typename S>
Vector<S> next_word_distribution(const TokenSequence& source,
                                 const TokenSequence& partial_target,
                                 const ModelParams<S>& params,
                                 const EmbeddingTable<S>& src_table,
                                 const EmbeddingTable<S>& tgt_table) {
  if (source.ids.empty()) {
    throw std::invalid_argument("next_word_distribution: empty source");
  }
  std::vector<Vector<S>> inputs;
  inputs.reserve(source.ids.size() + partial_target.ids.size());
  for (TokenId id : source.ids) {
    inputs.push_back(detail::to_vector(src_table.row(id)));
  }
  for (TokenId id : partial_target.ids) {
    inputs.push_back(detail::to_vector(tgt_table.row(id)));
  }
  return softmax(forward_sequence(inputs, params).logits);
}

inline double clamped_log(double p) {
  return std::log(std::max(p, kProbFloor));
}

// ln P((y_1..y_E) | source) via the sum of per-step conditional log
// probabilities. The target must end with EOS.
template <typename S>
double sequence_log_probability(const TokenSequence& source,
                                const TokenSequence& target,
                                const ModelParams<S>& params,
                                const EmbeddingTable<S>& src_table,
                                const EmbeddingTable<S>& tgt_table) {
  const TokenId eos = static_cast<TokenId>(tgt_table.vectors.rows() - 1);
  if (target.ids.empty() || target.ids.back() != eos) {
    throw std::invalid_argument(
        "sequence_log_probability: target must end with the EOS id");
  }
  auto state = DecodeState<S>::start(source, params, src_table);
  double total = 0.0;
  for (TokenId id : target.ids) {
    const Vector<S> dist = state.distribution(params);
    const double lp = clamped_log(static_cast<double>(dist[id]));
    total += lp;
    state.advance(id, lp, params, tgt_table);
  }
  return total;
}

template <typename S>
struct GreedyResult {
  std::vector<TokenId> ids;
  double log_prob = 0.0;
};

// Emits the argmax of the next-word distribution until EOS or max_len.
template <typename S>
GreedyResult<S> greedy_decode(const TokenSequence& source,
                              const ModelParams<S>& params,
                              const EmbeddingTable<S>& src_table,
                              const EmbeddingTable<S>& tgt_table,
                              std::size_t max_len = 50) {
  if (max_len < 1) {
    throw std::invalid_argument("greedy_decode: max_len must be >= 1");
  }
  const TokenId eos = static_cast<TokenId>(tgt_table.vectors.rows() - 1);
  auto state = DecodeState<S>::start(source, params, src_table);
  for (std::size_t k = 0; k < max_len; ++k) {
    const Vector<S> dist = state.distribution(params);
    const TokenId pick = static_cast<TokenId>(argmax_lowest(dist));
    state.advance(pick, clamped_log(static_cast<double>(dist[pick])), params,
                  tgt_table);
    if (pick == eos) break;
  }
  return {state.emitted_ids, state.cumulative_log_prob};
}

struct Hypothesis {
  std::vector<TokenId> emitted_ids;
  double cumulative_log_prob = 0.0;
  bool finished = false;  // emitted EOS or hit the length cap
};

// Beam search over cumulative log probability, no length normalization.
// Hypotheses that emit EOS are retired and compared against the rest at
// the end. With beam_width 1 this reproduces greedy_decode exactly.
template <typename S>
std::vector<Hypothesis> beam_decode(const TokenSequence& source,
                                    const ModelParams<S>& params,
                                    const EmbeddingTable<S>& src_table,
                                    const EmbeddingTable<S>& tgt_table,
                                    std::size_t beam_width,
                                    std::size_t max_len = 50) {
  if (beam_width < 1) {
    throw std::invalid_argument("beam_decode: beam_width must be >= 1");
  }
  if (max_len < 1) {
    throw std::invalid_argument("beam_decode: max_len must be >= 1");
  }
  const TokenId eos = static_cast<TokenId>(tgt_table.vectors.rows() - 1);

  std::vector<DecodeState<S>> beam;
  beam.push_back(DecodeState<S>::start(source, params, src_table));
  std::vector<Hypothesis> finished;

  for (std::size_t k = 0; k < max_len && !beam.empty(); ++k) {
    // (score, parent index, token id); ids ascend within one parent so
    // equal scores resolve to the lowest id.
    struct Extension {
      double score;
      std::size_t parent;
      TokenId id;
      double step_log_prob;
    };
    std::vector<Extension> extensions;
    extensions.reserve(beam.size() * beam_width);
    for (std::size_t b = 0; b < beam.size(); ++b) {
      const Vector<S> dist = beam[b].distribution(params);
      for (std::size_t id = 0; id < dist.size(); ++id) {
        const double lp = clamped_log(static_cast<double>(dist[id]));
        extensions.push_back({beam[b].cumulative_log_prob + lp, b,
                              static_cast<TokenId>(id), lp});
      }
    }
    std::stable_sort(extensions.begin(), extensions.end(),
                     [](const Extension& a, const Extension& b) {
                       return a.score > b.score;
                     });
    if (extensions.size() > beam_width) extensions.resize(beam_width);

    std::vector<DecodeState<S>> next_beam;
    for (const auto& ext : extensions) {
      DecodeState<S> state = beam[ext.parent];
      state.advance(ext.id, ext.step_log_prob, params, tgt_table);
      if (ext.id == eos) {
        finished.push_back(
            {state.emitted_ids, state.cumulative_log_prob, true});
      } else {
        next_beam.push_back(std::move(state));
      }
    }
    beam = std::move(next_beam);
  }

  // Anything still open has hit the cap.
  for (auto& state : beam) {
    finished.push_back({state.emitted_ids, state.cumulative_log_prob, true});
  }
  std::stable_sort(finished.begin(), finished.end(),
                   [](const Hypothesis& a, const Hypothesis& b) {
                     return a.cumulative_log_prob > b.cumulative_log_prob;
                   });
  return finished;
}

enum class PrefixMode { correct, self_fed };

struct AccuracyStats {
  std::size_t correct = 0;
  std::size_t total = 0;
  double sentence_fraction_sum = 0.0;
  std::size_t sentences = 0;

  // Token-level micro average.
  double micro() const {
    return total == 0 ? 0.0
                      : static_cast<double>(correct) / static_cast<double>(total);
  }
  // Sentence-averaged alternative.
  double macro() const {
    return sentences == 0 ? 0.0 : sentence_fraction_sum / sentences;
  }
};

// Fraction of positions where the argmax prediction equals the ground-truth
// next token, with the prefix either taken from the reference translation
// or built from the model's own predictions.
template <typename S>
AccuracyStats next_word_accuracy_stats(
    const std::vector<std::pair<TokenSequence, TokenSequence>>& dataset,
    const ModelParams<S>& params, const EmbeddingTable<S>& src_table,
    const EmbeddingTable<S>& tgt_table, PrefixMode mode) {
  if (dataset.empty()) {
    throw std::invalid_argument("next_word_accuracy: empty dataset");
  }
  AccuracyStats stats;
  for (const auto& [source, target] : dataset) {
    auto state = DecodeState<S>::start(source, params, src_table);
    std::size_t pair_correct = 0;
    for (std::size_t k = 0; k < target.ids.size(); ++k) {
      const Vector<S> dist = state.distribution(params);
      const TokenId pred = static_cast<TokenId>(argmax_lowest(dist));
      const TokenId truth = target.ids[k];
      if (pred == truth) ++pair_correct;
      if (k + 1 < target.ids.size()) {
        const TokenId fed = (mode == PrefixMode::correct) ? truth : pred;
        state.advance(fed, 0.0, params, tgt_table);
      }
    }
    stats.correct += pair_correct;
    stats.total += target.ids.size();
    stats.sentence_fraction_sum +=
        target.ids.empty() ? 0.0
                           : static_cast<double>(pair_correct) /
                                 static_cast<double>(target.ids.size());
    stats.sentences += 1;
  }
  return stats;
}

template <typename S>
double next_word_accuracy(
    const std::vector<std::pair<TokenSequence, TokenSequence>>& dataset,
    const ModelParams<S>& params, const EmbeddingTable<S>& src_table,
    const EmbeddingTable<S>& tgt_table, PrefixMode mode) {
  return next_word_accuracy_stats(dataset, params, src_table, tgt_table, mode)
      .micro();
}

}  // namespace grumt
