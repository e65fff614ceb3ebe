#pragma once

#include <cstdint>
#include <cstring>
#include <istream>
#include <map>
#include <ostream>
#include <stdexcept>
#include <utility>
#include <vector>

#include "grumt/io.hpp"
#include "grumt/vocab.hpp"

namespace grumt {

struct SentencePair {
  TokenSequence source;
  TokenSequence target;
};

// A group of sentence pairs whose source sequences all have length
// source_len and whose target sequences all have length target_len, so the
// whole batch steps through the network in lockstep.
struct Batch {
  std::vector<SentencePair> pairs;
  std::size_t source_len = 0;
  std::size_t target_len = 0;

  std::size_t size() const { return pairs.size(); }
};

// Groups pairs by exact (source length, target length), cuts each group
// into full batches of batch_size, and discards the remainder of every
// group. Pairs longer than max_len on either side are discarded up front.
// Returns an empty list when nothing survives.
inline std::vector<Batch> make_batches(const std::vector<SentencePair>& pairs,
                                       std::size_t batch_size = 128,
                                       std::size_t max_len = 50) {
  if (batch_size < 1) {
    throw std::invalid_argument("make_batches: batch_size must be >= 1");
  }
  std::map<std::pair<std::size_t, std::size_t>, std::vector<SentencePair>>
      groups;
  for (const auto& pair : pairs) {
    const std::size_t f = pair.source.length();
    const std::size_t e = pair.target.length();
    if (f == 0 || e == 0 || f > max_len || e > max_len) continue;
    groups[{f, e}].push_back(pair);
  }
  std::vector<Batch> batches;
  for (auto& [shape, members] : groups) {
    const std::size_t full = members.size() / batch_size;
    for (std::size_t b = 0; b < full; ++b) {
      Batch batch;
      batch.source_len = shape.first;
      batch.target_len = shape.second;
      batch.pairs.assign(members.begin() + b * batch_size,
                         members.begin() + (b + 1) * batch_size);
      batches.push_back(std::move(batch));
    }
  }
  return batches;
}

// Batch file layout: "GRUB" magic, format byte, then pair count and the two
// shared lengths as little-endian u32, then per pair the source ids
// followed by the target ids.
inline constexpr char kBatchMagic[4] = {'G', 'R', 'U', 'B'};
inline constexpr std::uint8_t kBatchFormatVersion = 1;

inline void write_batch(const Batch& batch, std::ostream& out) {
  out.write(kBatchMagic, 4);
  io::write_u8(out, kBatchFormatVersion);
  io::write_u32(out, static_cast<std::uint32_t>(batch.pairs.size()));
  io::write_u32(out, static_cast<std::uint32_t>(batch.source_len));
  io::write_u32(out, static_cast<std::uint32_t>(batch.target_len));
  for (const auto& pair : batch.pairs) {
    for (TokenId id : pair.source.ids) io::write_u32(out, id);
    for (TokenId id : pair.target.ids) io::write_u32(out, id);
  }
}

inline Batch read_batch(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kBatchMagic, 4) != 0) {
    throw std::runtime_error("not a batch file (bad magic)");
  }
  const std::uint8_t version = io::read_u8(in);
  if (version != kBatchFormatVersion) {
    throw std::runtime_error("unsupported batch format version " +
                             std::to_string(version));
  }
  Batch batch;
  const std::uint32_t count = io::read_u32(in);
  batch.source_len = io::read_u32(in);
  batch.target_len = io::read_u32(in);
  batch.pairs.resize(count);
  for (auto& pair : batch.pairs) {
    pair.source.side = Side::source;
    pair.target.side = Side::target;
    pair.source.ids.resize(batch.source_len);
    for (auto& id : pair.source.ids) id = io::read_u32(in);
    pair.target.ids.resize(batch.target_len);
    for (auto& id : pair.target.ids) id = io::read_u32(in);
  }
  return batch;
}

}  // namespace grumt
