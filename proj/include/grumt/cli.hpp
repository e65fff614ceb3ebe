#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "grumt/batching.hpp"
#include "grumt/checkpoint.hpp"
#include "grumt/embeddings.hpp"
#include "grumt/gradcheck.hpp"
#include "grumt/gru.hpp"
#include "grumt/io.hpp"
#include "grumt/training.hpp"
#include "grumt/translator.hpp"
#include "grumt/vocab.hpp"

namespace grumt::cli {

namespace fs = std::filesystem;

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

// Source tables use the model seed directly, target tables seed+1; train,
// translate and eval all reconstruct identical tables this way.
template <typename S>
std::pair<EmbeddingTable<S>, EmbeddingTable<S>> load_tables(
    const std::string& src_emb, const std::string& tgt_emb,
    const Vocabulary& src_vocab, const Vocabulary& tgt_vocab, std::size_t dim,
    std::uint64_t seed) {
  auto src = load_embeddings_file<S>(src_emb, src_vocab, dim, seed);
  auto tgt = load_embeddings_file<S>(tgt_emb, tgt_vocab, dim, seed + 1);
  return {std::move(src), std::move(tgt)};
}

inline std::vector<Batch> read_batch_dir(const std::string& dir) {
  std::vector<fs::path> files;
  if (!fs::is_directory(dir)) {
    throw std::runtime_error("batch directory not found: " + dir);
  }
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".grub") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<Batch> batches;
  batches.reserve(files.size());
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open batch file: " + f.string());
    batches.push_back(read_batch(in));
  }
  return batches;
}

struct ModelBundle {
  Checkpoint<float> ckpt;
  Vocabulary src_vocab;
  Vocabulary tgt_vocab;
  EmbeddingTable<float> src_table;
  EmbeddingTable<float> tgt_table;
};

inline ModelBundle load_model_bundle(const std::string& model,
                                     const std::string& src_vocab_path,
                                     const std::string& tgt_vocab_path,
                                     const std::string& src_emb,
                                     const std::string& tgt_emb) {
  ModelBundle bundle;
  bundle.ckpt = load_checkpoint_file<float>(model);
  bundle.src_vocab = load_vocabulary_file(src_vocab_path);
  bundle.tgt_vocab = load_vocabulary_file(tgt_vocab_path);
  if (bundle.tgt_vocab.id_count() != bundle.ckpt.params.vocab_ids()) {
    throw std::runtime_error(
        "target vocabulary has " + std::to_string(bundle.tgt_vocab.id_count()) +
        " ids but the model expects " +
        std::to_string(bundle.ckpt.params.vocab_ids()));
  }
  auto [src_table, tgt_table] = load_tables<float>(
      src_emb, tgt_emb, bundle.src_vocab, bundle.tgt_vocab,
      bundle.ckpt.params.input_size, bundle.ckpt.seed);
  bundle.src_table = std::move(src_table);
  bundle.tgt_table = std::move(tgt_table);
  return bundle;
}

inline int run_build_vocab(const std::string& input, std::size_t size,
                           const std::string& out_path, std::ostream& out) {
  std::ifstream in(input);
  if (!in) throw std::runtime_error("cannot open file: " + input);
  const Vocabulary vocab = build_vocabulary(in, size);
  io::AtomicFileWriter writer(out_path, std::ios::out);
  save_vocabulary(vocab, writer.stream());
  writer.commit();
  out << "wrote " << vocab.ranked_size() << " ranked tokens ("
      << vocab.id_count() << " ids) to " << out_path << "\n";
  return 0;
}

inline int run_make_batches(const std::string& src, const std::string& tgt,
                            const std::string& src_vocab_path,
                            const std::string& tgt_vocab_path,
                            std::size_t batch_size, std::size_t max_len,
                            const std::string& out_dir, std::ostream& out) {
  const auto src_lines = read_lines(src);
  const auto tgt_lines = read_lines(tgt);
  if (src_lines.size() != tgt_lines.size()) {
    throw std::runtime_error("line count mismatch: " + src + " has " +
                             std::to_string(src_lines.size()) + ", " + tgt +
                             " has " + std::to_string(tgt_lines.size()));
  }
  const Vocabulary src_vocab = load_vocabulary_file(src_vocab_path);
  const Vocabulary tgt_vocab = load_vocabulary_file(tgt_vocab_path);
  std::vector<SentencePair> pairs;
  pairs.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    pairs.push_back({encode(src_lines[i], src_vocab, Side::source),
                     encode(tgt_lines[i], tgt_vocab, Side::target)});
  }
  const std::vector<Batch> batches = make_batches(pairs, batch_size, max_len);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < batches.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "batch_%05zu.grub", i);
    io::AtomicFileWriter writer(fs::path(out_dir) / name);
    write_batch(batches[i], writer.stream());
    writer.commit();
  }
  std::size_t kept = 0;
  for (const auto& b : batches) kept += b.size();
  out << "wrote " << batches.size() << " batches (" << kept << " of "
      << pairs.size() << " pairs) to " << out_dir << "\n";
  return 0;
}

inline int run_train(const std::string& config_path,
                     const std::string& batches_dir,
                     const std::string& src_vocab_path,
                     const std::string& tgt_vocab_path,
                     const std::string& src_emb, const std::string& tgt_emb,
                     const std::string& out_dir, std::int64_t seed_override,
                     std::ostream& out) {
  std::ifstream config_in(config_path);
  if (!config_in) {
    throw std::runtime_error("cannot open config file: " + config_path);
  }
  TrainingConfig config = parse_training_config(config_in);
  if (seed_override >= 0) {
    config.rng_seed = static_cast<std::uint64_t>(seed_override);
  }

  const Vocabulary src_vocab = load_vocabulary_file(src_vocab_path);
  const Vocabulary tgt_vocab = load_vocabulary_file(tgt_vocab_path);
  const std::size_t dim = probe_embedding_dim(src_emb);
  auto [src_table, tgt_table] = load_tables<float>(
      src_emb, tgt_emb, src_vocab, tgt_vocab, dim, config.rng_seed);

  const std::vector<Batch> batches = read_batch_dir(batches_dir);
  fs::create_directories(out_dir);

  CheckpointFn<float> sink = [&](const ModelParams<float>& params,
                                 const OptimizerState<float>& opt,
                                 std::size_t epoch, std::size_t batch) {
    Checkpoint<float> ckpt{params, opt, config.rng_seed,
                           static_cast<std::uint32_t>(epoch),
                           static_cast<std::uint32_t>(batch)};
    char name[48];
    if (batch == batches.size()) {
      std::snprintf(name, sizeof(name), "epoch_%04zu.grumt", epoch);
    } else {
      std::snprintf(name, sizeof(name), "check_e%04zu_b%06zu.grumt", epoch,
                    batch);
    }
    save_checkpoint_file(ckpt, (fs::path(out_dir) / name).string());
  };

  TrainResult<float> result =
      train(config, batches, src_table, tgt_table, sink);
  for (const auto& e : result.log.epochs) {
    out << "epoch " << e.epoch << ": mean loss " << e.mean_loss << " ("
        << e.millis << " ms)\n";
  }

  Checkpoint<float> final_ckpt{result.params, result.opt_state,
                               config.rng_seed,
                               static_cast<std::uint32_t>(config.max_epochs),
                               static_cast<std::uint32_t>(batches.size())};
  save_checkpoint_file(final_ckpt,
                       (fs::path(out_dir) / "final.grumt").string());
  {
    io::AtomicFileWriter writer(fs::path(out_dir) / "training_log.csv",
                                std::ios::out);
    write_training_log(result.log, writer.stream());
    writer.commit();
  }
  out << "final checkpoint: " << (fs::path(out_dir) / "final.grumt").string()
      << "\n";
  return 0;
}

inline int run_translate(const std::string& model,
                         const std::string& src_vocab_path,
                         const std::string& tgt_vocab_path,
                         const std::string& src_emb,
                         const std::string& tgt_emb, std::size_t beam,
                         std::size_t max_len, const std::string& input,
                         std::istream& fallback_in, std::ostream& out) {
  const ModelBundle bundle = load_model_bundle(model, src_vocab_path,
                                               tgt_vocab_path, src_emb,
                                               tgt_emb);
  std::ifstream file_in;
  std::istream* in = &fallback_in;
  if (!input.empty()) {
    file_in.open(input);
    if (!file_in) throw std::runtime_error("cannot open file: " + input);
    in = &file_in;
  }
  std::string line;
  while (std::getline(*in, line)) {
    const TokenSequence source = encode(line, bundle.src_vocab, Side::source);
    std::vector<TokenId> ids;
    if (beam <= 1) {
      ids = greedy_decode(source, bundle.ckpt.params, bundle.src_table,
                          bundle.tgt_table, max_len)
                .ids;
    } else {
      const auto ranked = beam_decode(source, bundle.ckpt.params,
                                      bundle.src_table, bundle.tgt_table, beam,
                                      max_len);
      ids = ranked.front().emitted_ids;
    }
    out << render_tokens(ids, bundle.tgt_vocab) << "\n";
  }
  return 0;
}

inline int run_eval(const std::string& model, const std::string& mode,
                    const std::string& src, const std::string& tgt,
                    const std::string& src_vocab_path,
                    const std::string& tgt_vocab_path,
                    const std::string& src_emb, const std::string& tgt_emb,
                    bool sentence_average, std::ostream& out) {
  PrefixMode prefix_mode;
  if (mode == "correct") {
    prefix_mode = PrefixMode::correct;
  } else if (mode == "self-fed") {
    prefix_mode = PrefixMode::self_fed;
  } else {
    throw std::runtime_error("--mode must be 'correct' or 'self-fed'");
  }
  const ModelBundle bundle = load_model_bundle(model, src_vocab_path,
                                               tgt_vocab_path, src_emb,
                                               tgt_emb);
  const auto src_lines = read_lines(src);
  const auto tgt_lines = read_lines(tgt);
  if (src_lines.size() != tgt_lines.size()) {
    throw std::runtime_error("line count mismatch between " + src + " and " +
                             tgt);
  }
  std::vector<std::pair<TokenSequence, TokenSequence>> dataset;
  dataset.reserve(src_lines.size());
  for (std::size_t i = 0; i < src_lines.size(); ++i) {
    dataset.emplace_back(encode(src_lines[i], bundle.src_vocab, Side::source),
                         encode(tgt_lines[i], bundle.tgt_vocab, Side::target));
  }
  const AccuracyStats stats =
      next_word_accuracy_stats(dataset, bundle.ckpt.params, bundle.src_table,
                               bundle.tgt_table, prefix_mode);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f",
                sentence_average ? stats.macro() : stats.micro());
  out << buf << "\n";
  return 0;
}

inline int run_gradcheck_command(std::uint64_t seed, std::size_t instances,
                                 double threshold, std::ostream& out) {
  const GradCheckReport report = run_gradcheck(seed, instances, threshold);
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", report.max_rel_error);
  out << "max relative error over " << report.instances << " instances: "
      << buf << " (threshold " << threshold << ") "
      << (report.passed() ? "PASS" : "FAIL") << "\n";
  return report.passed() ? 0 : 1;
}

}  // namespace detail

// Routes argv to the pipeline stages. Returns the process exit status and
// prints a one-line diagnostic on failure.
inline int dispatch(const std::vector<std::string>& args,
                    std::istream& in = std::cin, std::ostream& out = std::cout,
                    std::ostream& err = std::cerr) {
  CLI::App app{"GRU sequence-to-sequence translation toolkit"};
  app.require_subcommand(0, 1);
  bool show_version = false;
  app.add_flag("--version", show_version,
               "print the checkpoint format version and exit");

  auto* build = app.add_subcommand("build-vocab",
                                   "build a frequency-ranked vocabulary");
  std::string bv_input, bv_out;
  std::size_t bv_size = 80000;
  build->add_option("--input", bv_input, "corpus text file")->required();
  build->add_option("--size", bv_size, "ranked vocabulary size limit");
  build->add_option("--out", bv_out, "output vocabulary file")->required();

  auto* mb = app.add_subcommand(
      "make-batches", "encode a parallel corpus into uniform-shape batches");
  std::string mb_src, mb_tgt, mb_sv, mb_tv, mb_out;
  std::size_t mb_batch_size = 128, mb_max_len = 50;
  mb->add_option("--src", mb_src, "source-language text file")->required();
  mb->add_option("--tgt", mb_tgt, "target-language text file")->required();
  mb->add_option("--src-vocab", mb_sv, "source vocabulary file")->required();
  mb->add_option("--tgt-vocab", mb_tv, "target vocabulary file")->required();
  mb->add_option("--batch-size", mb_batch_size, "pairs per batch");
  mb->add_option("--max-len", mb_max_len, "length cap per side");
  mb->add_option("--out", mb_out, "output batch directory")->required();

  auto* tr = app.add_subcommand("train", "train a model on prepared batches");
  std::string tr_config, tr_batches, tr_sv, tr_tv, tr_semb, tr_temb, tr_out;
  std::int64_t tr_seed = -1;
  tr->add_option("--config", tr_config, "key=value training config file")
      ->required();
  tr->add_option("--batches", tr_batches, "batch directory")->required();
  tr->add_option("--src-vocab", tr_sv, "source vocabulary file")->required();
  tr->add_option("--tgt-vocab", tr_tv, "target vocabulary file")->required();
  tr->add_option("--src-emb", tr_semb, "source embedding text file")
      ->required();
  tr->add_option("--tgt-emb", tr_temb, "target embedding text file")
      ->required();
  tr->add_option("--out", tr_out, "checkpoint output directory")->required();
  tr->add_option("--seed", tr_seed, "override the config rng_seed");

  auto* tl = app.add_subcommand(
      "translate", "translate source sentences read line-by-line");
  std::string tl_model, tl_sv, tl_tv, tl_semb, tl_temb, tl_input;
  std::size_t tl_beam = 1, tl_max_len = 50;
  tl->add_option("--model", tl_model, "checkpoint file")->required();
  tl->add_option("--src-vocab", tl_sv, "source vocabulary file")->required();
  tl->add_option("--tgt-vocab", tl_tv, "target vocabulary file")->required();
  tl->add_option("--src-emb", tl_semb, "source embedding text file")
      ->required();
  tl->add_option("--tgt-emb", tl_temb, "target embedding text file")
      ->required();
  tl->add_option("--beam", tl_beam, "beam width (1 = greedy)");
  tl->add_option("--max-len", tl_max_len, "maximum emitted tokens");
  tl->add_option("--input", tl_input,
                 "read sentences from this file instead of standard input");

  auto* ev = app.add_subcommand("eval",
                                "next-word accuracy on a parallel corpus");
  std::string ev_model, ev_mode, ev_src, ev_tgt, ev_sv, ev_tv, ev_semb,
      ev_temb;
  bool ev_sentence_average = false;
  ev->add_option("--model", ev_model, "checkpoint file")->required();
  ev->add_option("--mode", ev_mode, "prefix mode: correct or self-fed")
      ->required();
  ev->add_option("--src", ev_src, "source-language text file")->required();
  ev->add_option("--tgt", ev_tgt, "target-language text file")->required();
  ev->add_option("--src-vocab", ev_sv, "source vocabulary file")->required();
  ev->add_option("--tgt-vocab", ev_tv, "target vocabulary file")->required();
  ev->add_option("--src-emb", ev_semb, "source embedding text file")
      ->required();
  ev->add_option("--tgt-emb", ev_temb, "target embedding text file")
      ->required();
  ev->add_flag("--sentence-average", ev_sentence_average,
               "average per-sentence fractions instead of pooling tokens");

  auto* gc = app.add_subcommand(
      "gradcheck", "verify analytic gradients against finite differences");
  std::uint64_t gc_seed = 7;
  std::size_t gc_instances = 100;
  double gc_threshold = 1e-5;
  gc->add_option("--seed", gc_seed, "generator seed");
  gc->add_option("--instances", gc_instances, "random instances to run");
  gc->add_option("--threshold", gc_threshold, "maximum relative error");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (show_version) {
      out << "checkpoint format version "
          << static_cast<int>(kCheckpointFormatVersion) << "\n";
      return 0;
    }
    if (build->parsed()) {
      return detail::run_build_vocab(bv_input, bv_size, bv_out, out);
    }
    if (mb->parsed()) {
      return detail::run_make_batches(mb_src, mb_tgt, mb_sv, mb_tv,
                                      mb_batch_size, mb_max_len, mb_out, out);
    }
    if (tr->parsed()) {
      return detail::run_train(tr_config, tr_batches, tr_sv, tr_tv, tr_semb,
                               tr_temb, tr_out, tr_seed, out);
    }
    if (tl->parsed()) {
      return detail::run_translate(tl_model, tl_sv, tl_tv, tl_semb, tl_temb,
                                   tl_beam, tl_max_len, tl_input, in, out);
    }
    if (ev->parsed()) {
      return detail::run_eval(ev_model, ev_mode, ev_src, ev_tgt, ev_sv, ev_tv,
                              ev_semb, ev_temb, ev_sentence_average, out);
    }
    if (gc->parsed()) {
      return detail::run_gradcheck_command(gc_seed, gc_instances, gc_threshold,
                                           out);
    }
    out << app.help();
    return 0;
  } catch (const std::exception& e) {
    err << "grumt: " << e.what() << "\n";
    return 1;
  }
}

inline int dispatch(int argc, const char* const* argv) {
  std::vector<std::string> args;
  args.reserve(argc > 0 ? argc - 1 : 0);
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return dispatch(args);
}

}  // namespace grumt::cli
