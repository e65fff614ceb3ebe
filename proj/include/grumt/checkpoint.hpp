#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "grumt/gru.hpp"
#include "grumt/io.hpp"
#include "grumt/training.hpp"

namespace grumt {

// Checkpoint container:
//   bytes 0-4   magic "GRUMT"
//   byte  5     format version
//   u32 x 4     manifest: layer count, hidden size, input size,
//               target vocab id count (little-endian)
//   f32 blocks  parameters, row-major little-endian, canonical order
//               (per layer W, U, W_z, U_z, W_v, U_v; then output weight,
//               output bias)
//   f32 blocks  velocity buffers in the same order
//   u64         generator seed
//   u32 x 2     epoch and batch cursor
inline constexpr char kCheckpointMagic[5] = {'G', 'R', 'U', 'M', 'T'};
inline constexpr std::uint8_t kCheckpointFormatVersion = 1;

template <typename S>
struct Checkpoint {
  ModelParams<S> params;
  OptimizerState<S> opt_state;
  std::uint64_t seed = 0;
  std::uint32_t epoch = 0;
  std::uint32_t batch = 0;
};

template <typename S>
void save_checkpoint(const Checkpoint<S>& ckpt, std::ostream& out) {
  out.write(kCheckpointMagic, 5);
  io::write_u8(out, kCheckpointFormatVersion);
  io::write_u32(out, static_cast<std::uint32_t>(ckpt.params.layer_count()));
  io::write_u32(out, static_cast<std::uint32_t>(ckpt.params.hidden_size));
  io::write_u32(out, static_cast<std::uint32_t>(ckpt.params.input_size));
  io::write_u32(out, static_cast<std::uint32_t>(ckpt.params.vocab_ids()));
  auto write_blocks = [&out](const ModelParams<S>& p) {
    visit_param_data(p, [&out](std::span<const S> block) {
      for (S v : block) io::write_f32(out, static_cast<float>(v));
    });
  };
  write_blocks(ckpt.params);
  write_blocks(ckpt.opt_state.velocity);
  io::write_u64(out, ckpt.seed);
  io::write_u32(out, ckpt.epoch);
  io::write_u32(out, ckpt.batch);
  if (!out) throw std::runtime_error("checkpoint write failed");
}

template <typename S>
Checkpoint<S> load_checkpoint(std::istream& in) {
  char magic[5];
  if (!in.read(magic, 5) || std::memcmp(magic, kCheckpointMagic, 5) != 0) {
    throw std::runtime_error("not a checkpoint file (bad magic)");
  }
  const std::uint8_t version = io::read_u8(in);
  if (version != kCheckpointFormatVersion) {
    throw std::runtime_error("unsupported checkpoint format version " +
                             std::to_string(version));
  }
  const std::uint32_t layers = io::read_u32(in);
  const std::uint32_t hidden = io::read_u32(in);
  const std::uint32_t input = io::read_u32(in);
  const std::uint32_t vocab = io::read_u32(in);
  if (layers < 1 || hidden < 1 || input < 1 || vocab < 1) {
    throw std::runtime_error("checkpoint manifest has zero dimension");
  }

  Checkpoint<S> ckpt;
  ckpt.params.hidden_size = hidden;
  ckpt.params.input_size = input;
  ckpt.params.layers.resize(layers);
  for (std::uint32_t l = 0; l < layers; ++l) {
    const std::size_t in_size = (l == 0) ? input : hidden;
    auto& layer = ckpt.params.layers[l];
    layer.W = Matrix<S>(hidden, in_size);
    layer.U = Matrix<S>(hidden, hidden);
    layer.Wz = Matrix<S>(hidden, in_size);
    layer.Uz = Matrix<S>(hidden, hidden);
    layer.Wv = Matrix<S>(hidden, in_size);
    layer.Uv = Matrix<S>(hidden, hidden);
  }
  ckpt.params.output_weight = Matrix<S>(vocab, hidden);
  ckpt.params.output_bias = Vector<S>(vocab, S{0});
  ckpt.opt_state.velocity = zeros_like(ckpt.params);

  auto read_blocks = [&in](ModelParams<S>& p) {
    visit_param_data(p, [&in](std::span<S> block) {
      for (auto& v : block) v = static_cast<S>(io::read_f32(in));
    });
  };
  read_blocks(ckpt.params);
  read_blocks(ckpt.opt_state.velocity);
  ckpt.seed = io::read_u64(in);
  ckpt.epoch = io::read_u32(in);
  ckpt.batch = io::read_u32(in);
  if (in.peek() != std::char_traits<char>::eof()) {
    throw std::runtime_error("checkpoint file has trailing bytes");
  }
  return ckpt;
}

template <typename S>
void save_checkpoint_file(const Checkpoint<S>& ckpt, const std::string& path) {
  io::AtomicFileWriter writer(path);
  save_checkpoint(ckpt, writer.stream());
  writer.commit();
}

template <typename S>
Checkpoint<S> load_checkpoint_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  return load_checkpoint<S>(in);
}

}  // namespace grumt
