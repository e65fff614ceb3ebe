#include "grumt/vocab.hpp"

#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

namespace grumt {
namespace {

using Tokens = std::vector<std::string>;

TEST(Tokenize, LowercasesAndSplitsOnWhitespace) {
  EXPECT_EQ(tokenize("Hello World ."), (Tokens{"hello", "world", "."}));
  EXPECT_EQ(tokenize(""), Tokens{});
  EXPECT_EQ(tokenize("   \t  "), Tokens{});
}

TEST(Tokenize, SeparatesPunctuation) {
  EXPECT_EQ(tokenize("world."), (Tokens{"world", "."}));
  EXPECT_EQ(tokenize("Oui, monsieur!"), (Tokens{"oui", ",", "monsieur", "!"}));
  EXPECT_EQ(tokenize("(vote)"), (Tokens{"(", "vote", ")"}));
  EXPECT_EQ(tokenize("9,5 %"), (Tokens{"9", ",", "5", "%"}));
}

TEST(Tokenize, SplitsElisionsAtTheApostrophe) {
  EXPECT_EQ(tokenize("L'Europe"), (Tokens{"l'", "europe"}));
  EXPECT_EQ(tokenize("d'une"), (Tokens{"d'", "une"}));
  EXPECT_EQ(tokenize("qu'il"), (Tokens{"qu'", "il"}));
  EXPECT_EQ(tokenize("aujourd'hui"), (Tokens{"aujourd'", "hui"}));
  // Curly apostrophes behave like ASCII ones.
  EXPECT_EQ(tokenize("l’ordre"), (Tokens{"l'", "ordre"}));
}

TEST(Tokenize, KeepsHyphensInsideWords) {
  EXPECT_EQ(tokenize("peut-être"), (Tokens{"peut-être"}));
  EXPECT_EQ(tokenize("Permettez-moi"), (Tokens{"permettez-moi"}));
}

TEST(Tokenize, LowercasesAccentedLetters) {
  EXPECT_EQ(tokenize("Éducation"), (Tokens{"éducation"}));
  EXPECT_EQ(tokenize("À BRUXELLES"), (Tokens{"à", "bruxelles"}));
  EXPECT_EQ(tokenize("Œuvre"), (Tokens{"œuvre"}));
}

TEST(Tokenize, GuillemetsAndDashesStandAlone) {
  EXPECT_EQ(tokenize("le « principe » même"),
            (Tokens{"le", "«", "principe", "»", "même"}));
  EXPECT_EQ(tokenize("oui — non"), (Tokens{"oui", "—", "non"}));
}

// The chosen rule set, frozen over a 50-line sample. After a deliberate
// tokenizer change, regenerate the golden file with the snippet in
// tests/data/README.
TEST(Tokenize, FrenchSampleMatchesGoldenFile) {
  std::ifstream input(std::string(GRUMT_TEST_DATA_DIR) + "/french_sample.txt");
  std::ifstream golden(std::string(GRUMT_TEST_DATA_DIR) +
                       "/french_sample_tokens.txt");
  ASSERT_TRUE(input.is_open());
  ASSERT_TRUE(golden.is_open());
  std::string line, expected;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    ASSERT_TRUE(std::getline(golden, expected))
        << "golden file ends early at line " << line_no;
    std::string joined;
    for (const auto& tok : tokenize(line)) {
      if (!joined.empty()) joined.push_back(' ');
      joined += tok;
    }
    EXPECT_EQ(joined, expected) << "line " << line_no << ": " << line;
  }
  EXPECT_GE(line_no, 50u);
  EXPECT_FALSE(std::getline(golden, expected)) << "golden file has extra lines";
}

TEST(BuildVocabulary, RanksByFrequency) {
  std::stringstream corpus("a b a");
  const Vocabulary vocab = build_vocabulary(corpus, 2);
  EXPECT_EQ(vocab.tokens(), (Tokens{"a", "b"}));
  EXPECT_EQ(vocab.id_count(), 4u);
  EXPECT_EQ(vocab.nf_id(), 2u);
  EXPECT_EQ(vocab.eos_id(), 3u);
}

TEST(BuildVocabulary, PaperScaleIdCount) {
  std::stringstream corpus;
  for (int i = 0; i < 100000; ++i) corpus << 't' << i << ' ';
  const Vocabulary vocab = build_vocabulary(corpus, 80000);
  EXPECT_EQ(vocab.ranked_size(), 80000u);
  EXPECT_EQ(vocab.id_count(), 80002u);
}

TEST(BuildVocabulary, FewerDistinctTokensThanLimit) {
  std::stringstream corpus("x y");
  const Vocabulary vocab = build_vocabulary(corpus, 5);
  EXPECT_EQ(vocab.ranked_size(), 2u);
  EXPECT_EQ(vocab.id_count(), 4u);  // no padding ids beyond NF/EOS
}

TEST(BuildVocabulary, TiesBreakLexicographically) {
  std::stringstream corpus("b a c b a c");
  const Vocabulary vocab = build_vocabulary(corpus, 3);
  EXPECT_EQ(vocab.tokens(), (Tokens{"a", "b", "c"}));
}

TEST(BuildVocabulary, EmptyCorpusFails) {
  std::stringstream corpus("   \n  \n");
  EXPECT_THROW(build_vocabulary(corpus, 10), std::runtime_error);
}

TEST(BuildVocabulary, Deterministic) {
  const std::vector<std::string> lines{"le chat dort", "le chien dort",
                                       "le chat mange"};
  const Vocabulary a = build_vocabulary(lines, 4);
  const Vocabulary b = build_vocabulary(lines, 4);
  EXPECT_EQ(a.tokens(), b.tokens());
}

TEST(Encode, MapsTokensAndAppendsEos) {
  const Vocabulary vocab({"a", "b"}, 10);
  const TokenSequence seq = encode("a b", vocab);
  EXPECT_EQ(seq.ids, (std::vector<TokenId>{0, 1, vocab.eos_id()}));
}

TEST(Encode, OutOfVocabularyMapsToNf) {
  const Vocabulary vocab({"a", "b"}, 10);
  const TokenSequence seq = encode("a zzz", vocab);
  EXPECT_EQ(seq.ids, (std::vector<TokenId>{0, vocab.nf_id(), vocab.eos_id()}));
}

TEST(Encode, EmptyLineIsLoneEos) {
  const Vocabulary vocab({"a"}, 10);
  const TokenSequence seq = encode("", vocab);
  EXPECT_EQ(seq.ids, (std::vector<TokenId>{vocab.eos_id()}));
}

TEST(Encode, RoundTripRestoresInVocabularyTokens) {
  std::stringstream corpus("le chat dort bien le chat");
  const Vocabulary vocab = build_vocabulary(corpus, 3);
  const std::string line = "Le chat RONFLE bien";
  const TokenSequence seq = encode(line, vocab);
  const std::string rendered = render_tokens(seq.ids, vocab);
  // "ronfle" is out of vocabulary ("bien" ranks below the top 3 only if
  // counts say so); reconstruct expectations from the vocabulary itself.
  std::string expected;
  for (const auto& tok : tokenize(line)) {
    if (!expected.empty()) expected.push_back(' ');
    expected += vocab.find(tok) ? tok : "NF";
  }
  EXPECT_EQ(rendered, expected);
}

TEST(VocabularyIo, SaveLoadRoundTrip) {
  const Vocabulary vocab({"le", "chat", "l'", "café"}, 80000);
  std::stringstream file;
  save_vocabulary(vocab, file);
  const Vocabulary loaded = load_vocabulary(file);
  EXPECT_EQ(loaded.tokens(), vocab.tokens());
  EXPECT_EQ(loaded.nf_id(), vocab.nf_id());
  EXPECT_EQ(loaded.eos_id(), vocab.eos_id());
}

TEST(Vocabulary, RejectsDuplicatesAndBadIds) {
  EXPECT_THROW(Vocabulary({"a", "a"}, 10), std::invalid_argument);
  const Vocabulary vocab({"a"}, 10);
  EXPECT_THROW(vocab.token(vocab.nf_id()), std::out_of_range);
}

}  // namespace
}  // namespace grumt
