#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "grumt/matrix.hpp"
#include "grumt/rng.hpp"
#include "grumt/vocab.hpp"

namespace grumt {

// Bound for the uniform sampling of rows the embedding file does not
// provide (vocabulary misses plus the NF and EOS ids).
inline constexpr double kMissingEmbeddingBound = 0.1;

// Token-id -> dense vector lookup. Rows follow the vocabulary id layout:
// ranked tokens first, then the NF row, then the EOS row. Frozen after
// construction; the model never trains these.
template <typename S>
struct EmbeddingTable {
  std::size_t dim = 0;
  Matrix<S> vectors;   // (id count x dim)
  std::uint64_t seed = 0;  // seed used for the sampled rows

  std::span<const S> row(TokenId id) const {
    if (id >= vectors.rows()) {
      throw std::out_of_range("EmbeddingTable::row: id out of range");
    }
    return vectors.row(id);
  }

  std::span<const S> nf_vector() const {
    return vectors.row(vectors.rows() - 2);
  }
  std::span<const S> eos_vector() const {
    return vectors.row(vectors.rows() - 1);
  }
};

// Element-wise row lookup; output length equals sequence length.
template <typename S>
std::vector<Vector<S>> embed(const TokenSequence& seq,
                             const EmbeddingTable<S>& table) {
  std::vector<Vector<S>> out;
  out.reserve(seq.ids.size());
  for (TokenId id : seq.ids) {
    auto r = table.row(id);
    out.emplace_back(r.begin(), r.end());
  }
  return out;
}

namespace detail {

inline double parse_embedding_value(std::string_view field,
                                    std::size_t line_no) {
  double value = 0.0;
  const char* first = field.data();
  const char* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw std::runtime_error("embedding file line " + std::to_string(line_no) +
                             ": invalid number '" + std::string(field) + "'");
  }
  return value;
}

template <typename S>
void sample_row(Matrix<S>& m, std::size_t row, Rng& rng) {
  for (std::size_t j = 0; j < m.cols(); ++j) {
    m(row, j) = static_cast<S>(
        rng.uniform(-kMissingEmbeddingBound, kMissingEmbeddingBound));
  }
}

}  // namespace detail

// Reads a text-format embedding file ("token v1 v2 ... vdim" per line) and
// builds the table for the given vocabulary. File tokens outside the
// vocabulary are skipped. Vocabulary tokens missing from the file, plus the
// NF and EOS ids, get rows sampled uniformly from
// (-kMissingEmbeddingBound, kMissingEmbeddingBound) under the given seed.
template <typename S>
EmbeddingTable<S> load_embeddings(std::istream& in, const Vocabulary& vocab,
                                  std::size_t dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("load_embeddings: dim must be >= 1");
  EmbeddingTable<S> table;
  table.dim = dim;
  table.seed = seed;
  table.vectors = Matrix<S>(vocab.id_count(), dim);
  std::vector<bool> filled(vocab.ranked_size(), false);

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    std::vector<std::string_view> fields;
    const std::string_view view = line;
    std::size_t pos = 0;
    while (pos < view.size()) {
      const std::size_t next = view.find(' ', pos);
      const std::size_t end = (next == std::string_view::npos) ? view.size()
                                                               : next;
      if (end > pos) fields.push_back(view.substr(pos, end - pos));
      pos = end + 1;
    }
    if (fields.size() != dim + 1) {
      throw std::runtime_error(
          "embedding file line " + std::to_string(line_no) + ": expected " +
          std::to_string(dim) + " values, got " +
          std::to_string(fields.empty() ? 0 : fields.size() - 1));
    }
    const auto id = vocab.find(fields[0]);
    if (!id) continue;
    for (std::size_t j = 0; j < dim; ++j) {
      table.vectors(*id, j) =
          static_cast<S>(detail::parse_embedding_value(fields[j + 1], line_no));
    }
    filled[*id] = true;
  }

  Rng rng(seed);
  for (std::size_t i = 0; i < vocab.ranked_size(); ++i) {
    if (!filled[i]) detail::sample_row(table.vectors, i, rng);
  }
  detail::sample_row(table.vectors, vocab.nf_id(), rng);
  detail::sample_row(table.vectors, vocab.eos_id(), rng);
  return table;
}

template <typename S>
EmbeddingTable<S> load_embeddings_file(const std::string& path,
                                       const Vocabulary& vocab,
                                       std::size_t dim, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  return load_embeddings<S>(in, vocab, dim, seed);
}

// Table with every row sampled; used for toy corpora that have no
// pre-trained vectors.
template <typename S>
EmbeddingTable<S> random_embeddings(std::size_t id_count, std::size_t dim,
                                    std::uint64_t seed) {
  EmbeddingTable<S> table;
  table.dim = dim;
  table.seed = seed;
  table.vectors = Matrix<S>(id_count, dim);
  Rng rng(seed);
  for (std::size_t i = 0; i < id_count; ++i) {
    detail::sample_row(table.vectors, i, rng);
  }
  return table;
}

// Column count of the first data line, minus the token field. Used to
// discover the dimension of an embedding file before loading it.
inline std::size_t probe_embedding_dim(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open embedding file: " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::size_t fields = 0;
    bool in_field = false;
    for (char c : line) {
      if (c == ' ') {
        in_field = false;
      } else if (!in_field) {
        in_field = true;
        ++fields;
      }
    }
    if (fields < 2) {
      throw std::runtime_error("embedding file has no vector values: " + path);
    }
    return fields - 1;
  }
  throw std::runtime_error("embedding file is empty: " + path);
}

}  // namespace grumt
