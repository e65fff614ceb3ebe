#include "grumt/embeddings.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

namespace grumt {
namespace {

std::string vector_line(const std::string& token, std::size_t dim,
                        double start) {
  std::string line = token;
  for (std::size_t i = 0; i < dim; ++i) {
    line += ' ' + std::to_string(start + 0.01 * static_cast<double>(i));
  }
  return line;
}

TEST(LoadEmbeddings, ReadsVectorsForVocabularyTokens) {
  const Vocabulary vocab({"cat", "dog"}, 10);
  std::stringstream file;
  file << "cat 0.5 -1.25 3\n";
  const auto table = load_embeddings<double>(file, vocab, 3, 1);
  EXPECT_EQ(table.vectors.rows(), vocab.id_count());
  EXPECT_DOUBLE_EQ(table.vectors(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(table.vectors(0, 1), -1.25);
  EXPECT_DOUBLE_EQ(table.vectors(0, 2), 3.0);
}

TEST(LoadEmbeddings, MissingTokensGetSeededUniformRows) {
  const Vocabulary vocab({"cat", "zyzzyva"}, 10);
  std::stringstream file(vector_line("cat", 4, 0.0));
  const auto table = load_embeddings<double>(file, vocab, 4, 42);
  for (std::size_t j = 0; j < 4; ++j) {
    EXPECT_LT(std::abs(table.vectors(1, j)), kMissingEmbeddingBound);
  }
  // Reloading with the same seed regenerates the identical table.
  std::stringstream again(vector_line("cat", 4, 0.0));
  const auto reload = load_embeddings<double>(again, vocab, 4, 42);
  EXPECT_EQ(table.vectors, reload.vectors);
  // A different seed moves the sampled rows but not the file-backed ones.
  std::stringstream other(vector_line("cat", 4, 0.0));
  const auto reseeded = load_embeddings<double>(other, vocab, 4, 43);
  EXPECT_EQ(Vector<double>(table.vectors.row(0).begin(),
                           table.vectors.row(0).end()),
            Vector<double>(reseeded.vectors.row(0).begin(),
                           reseeded.vectors.row(0).end()));
  EXPECT_NE(table.vectors, reseeded.vectors);
}

TEST(LoadEmbeddings, NfAndEosRowsAreSampled) {
  const Vocabulary vocab({"cat"}, 10);
  std::stringstream file(vector_line("cat", 3, 1.0));
  const auto table = load_embeddings<double>(file, vocab, 3, 9);
  for (double v : table.nf_vector()) {
    EXPECT_LT(std::abs(v), kMissingEmbeddingBound);
  }
  for (double v : table.eos_vector()) {
    EXPECT_LT(std::abs(v), kMissingEmbeddingBound);
  }
  EXPECT_NE(Vector<double>(table.nf_vector().begin(), table.nf_vector().end()),
            Vector<double>(table.eos_vector().begin(),
                           table.eos_vector().end()));
}

TEST(LoadEmbeddings, WrongFieldCountNamesTheLine) {
  const Vocabulary vocab({"cat"}, 10);
  std::stringstream file("cat 0.1 0.2 0.3\ncat 0.1 0.2\n");
  try {
    load_embeddings<double>(file, vocab, 3, 1);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
}

TEST(LoadEmbeddings, NonNumericValueNamesTheLine) {
  const Vocabulary vocab({"cat"}, 10);
  std::stringstream file("cat 0.1 oops 0.3\n");
  try {
    load_embeddings<double>(file, vocab, 3, 1);
    FAIL() << "expected an error";
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(LoadEmbeddings, SkipsTokensOutsideTheVocabulary) {
  const Vocabulary vocab({"cat"}, 10);
  std::stringstream file("unrelated 9 9 9\ncat 1 2 3\n");
  const auto table = load_embeddings<double>(file, vocab, 3, 1);
  EXPECT_DOUBLE_EQ(table.vectors(0, 0), 1.0);
}

TEST(Embed, PreservesLengthOrderAndConcatenation) {
  const Vocabulary vocab({"a", "b"}, 10);
  std::stringstream file("a 1 0\nb 0 1\n");
  const auto table = load_embeddings<double>(file, vocab, 2, 1);

  TokenSequence empty;
  EXPECT_TRUE(embed(empty, table).empty());

  TokenSequence single{{0}, Side::source};
  const auto one = embed(single, table);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], (Vector<double>{1.0, 0.0}));

  TokenSequence with_nf{{0, vocab.nf_id()}, Side::source};
  const auto two = embed(with_nf, table);
  ASSERT_EQ(two.size(), 2u);
  EXPECT_EQ(two[1], Vector<double>(table.nf_vector().begin(),
                                   table.nf_vector().end()));

  TokenSequence s1{{0, 1}, Side::source};
  TokenSequence s2{{1, vocab.eos_id()}, Side::source};
  TokenSequence joined{{0, 1, 1, vocab.eos_id()}, Side::source};
  auto concat = embed(s1, table);
  for (auto& v : embed(s2, table)) concat.push_back(v);
  EXPECT_EQ(concat, embed(joined, table));
}

TEST(ProbeEmbeddingDim, CountsValueFields) {
  const std::string path = testing::TempDir() + "/probe_dim.txt";
  {
    std::ofstream out(path);
    out << "chat 0.25 -0.5 0.75 1.0\n";
  }
  EXPECT_EQ(probe_embedding_dim(path), 4u);
  std::remove(path.c_str());
}

}  // namespace
}  // namespace grumt
