#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace grumt {

using TokenId = std::uint32_t;

enum class Side { source, target };

struct TokenSequence {
  std::vector<TokenId> ids;
  Side side = Side::source;

  std::size_t length() const { return ids.size(); }
};

namespace detail {

// Lowercases ASCII letters plus the Latin-1 range that covers French
// (UTF-8 C3 80..C3 9E map to C3 A0..C3 BE, skipping the multiplication
// sign) and the OE ligature. Other bytes pass through unchanged.
inline std::string lowercase_utf8(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (c >= 'A' && c <= 'Z') {
      out.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if (c == 0xC3 && i + 1 < text.size()) {
      const unsigned char d = static_cast<unsigned char>(text[i + 1]);
      out.push_back(static_cast<char>(c));
      if (d >= 0x80 && d <= 0x9E && d != 0x97) {
        out.push_back(static_cast<char>(d + 0x20));
      } else {
        out.push_back(static_cast<char>(d));
      }
      ++i;
    } else if (c == 0xC5 && i + 1 < text.size() &&
               static_cast<unsigned char>(text[i + 1]) == 0x92) {
      out.push_back(static_cast<char>(0xC5));
      out.push_back(static_cast<char>(0x93));
      ++i;
    } else {
      out.push_back(static_cast<char>(c));
    }
  }
  return out;
}

inline bool is_ascii_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
         c == '\v';
}

inline bool is_standalone_punct(unsigned char c) {
  switch (c) {
    case '.': case ',': case ';': case ':': case '!': case '?':
    case '"': case '(': case ')': case '[': case ']': case '{': case '}':
    case '%': case '$': case '#': case '&': case '*': case '+': case '/':
    case '=': case '<': case '>': case '|': case '~': case '@': case '^':
    case '\\': case '`':
      return true;
    default:
      return false;
  }
}

// Multi-byte punctuation emitted as standalone tokens: guillemets, dashes,
// ellipsis, curly double quotes.
inline std::size_t match_multibyte_punct(std::string_view s, std::size_t i) {
  if (i + 1 < s.size() && static_cast<unsigned char>(s[i]) == 0xC2) {
    const unsigned char d = static_cast<unsigned char>(s[i + 1]);
    if (d == 0xAB || d == 0xBB) return 2;
  }
  if (i + 2 < s.size() && static_cast<unsigned char>(s[i]) == 0xE2 &&
      static_cast<unsigned char>(s[i + 1]) == 0x80) {
    const unsigned char d = static_cast<unsigned char>(s[i + 2]);
    if (d == 0x93 || d == 0x94 || d == 0xA6 || d == 0x9C || d == 0x9D ||
        d == 0x9E) {
      return 3;
    }
  }
  return 0;
}

// U+2019 (curly apostrophe), normalized to '\''.
inline bool is_curly_apostrophe(std::string_view s, std::size_t i) {
  return i + 2 < s.size() &&
         static_cast<unsigned char>(s[i]) == 0xE2 &&
         static_cast<unsigned char>(s[i + 1]) == 0x80 &&
         static_cast<unsigned char>(s[i + 2]) == 0x99;
}

}  // namespace detail

// Whitespace-delimited tokens, lowercased. Punctuation characters become
// standalone tokens; an apostrophe closes the token it follows, which
// splits French elisions (l'europe -> "l'", "europe"). Hyphens stay inside
// words. No stemming or lemmatization.
inline std::vector<std::string> tokenize(std::string_view line) {
  const std::string text = detail::lowercase_utf8(line);
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) {
      tokens.push_back(current);
      current.clear();
    }
  };
  for (std::size_t i = 0; i < text.size();) {
    const unsigned char c = static_cast<unsigned char>(text[i]);
    if (detail::is_ascii_space(c)) {
      flush();
      ++i;
      continue;
    }
    if (const std::size_t n = detail::match_multibyte_punct(text, i)) {
      flush();
      tokens.emplace_back(text.substr(i, n));
      i += n;
      continue;
    }
    if (c == '\'' || detail::is_curly_apostrophe(text, i)) {
      current.push_back('\'');
      flush();
      i += (c == '\'') ? 1 : 3;
      continue;
    }
    if (detail::is_standalone_punct(c)) {
      flush();
      tokens.emplace_back(1, static_cast<char>(c));
      ++i;
      continue;
    }
    current.push_back(static_cast<char>(c));
    ++i;
  }
  flush();
  return tokens;
}

// Frequency-ranked token<->id map with two reserved ids. Ranked tokens take
// ids 0..n-1; the not-found id and end-of-sentence id follow.
class Vocabulary {
 public:
  Vocabulary() = default;

  explicit Vocabulary(std::vector<std::string> ranked_tokens,
                      std::size_t size_limit = 80000)
      : tokens_(std::move(ranked_tokens)), size_limit_(size_limit) {
    if (tokens_.size() > size_limit_) {
      throw std::invalid_argument("vocabulary exceeds its size limit");
    }
    index_.reserve(tokens_.size());
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
        throw std::invalid_argument("duplicate vocabulary token: " + tokens_[i]);
      }
    }
  }

  std::size_t ranked_size() const { return tokens_.size(); }
  std::size_t size_limit() const { return size_limit_; }
  std::size_t id_count() const { return tokens_.size() + 2; }
  TokenId nf_id() const { return static_cast<TokenId>(tokens_.size()); }
  TokenId eos_id() const { return static_cast<TokenId>(tokens_.size() + 1); }

  std::optional<TokenId> find(std::string_view token) const {
    auto it = index_.find(std::string(token));
    return it == index_.end() ? std::nullopt
                              : std::optional<TokenId>(it->second);
  }

  TokenId id_or_nf(std::string_view token) const {
    auto found = find(token);
    return found ? *found : nf_id();
  }

  const std::string& token(TokenId id) const {
    if (id >= tokens_.size()) {
      throw std::out_of_range("Vocabulary::token: id is not a ranked token");
    }
    return tokens_[id];
  }

  const std::vector<std::string>& tokens() const { return tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, TokenId> index_;
  std::size_t size_limit_ = 80000;
};

// Ranks tokens by descending frequency, ties broken by lexicographic order,
// and keeps the top size_limit.
inline Vocabulary build_vocabulary(std::istream& corpus_lines,
                                   std::size_t size_limit) {
  if (size_limit < 1) {
    throw std::invalid_argument("build_vocabulary: size_limit must be >= 1");
  }
  std::unordered_map<std::string, std::uint64_t> counts;
  std::string line;
  while (std::getline(corpus_lines, line)) {
    for (auto& tok : tokenize(line)) ++counts[std::move(tok)];
  }
  if (counts.empty()) {
    throw std::runtime_error("build_vocabulary: corpus has no tokens");
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked(counts.begin(),
                                                            counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > size_limit) ranked.resize(size_limit);
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [tok, count] : ranked) tokens.push_back(std::move(tok));
  return Vocabulary(std::move(tokens), size_limit);
}

inline Vocabulary build_vocabulary(const std::vector<std::string>& lines,
                                   std::size_t size_limit) {
  std::stringstream joined;
  for (const auto& l : lines) joined << l << '\n';
  return build_vocabulary(joined, size_limit);
}

// Token ids for a line, with out-of-vocabulary tokens mapped to the
// not-found id and the end-of-sentence id appended.
inline TokenSequence encode(std::string_view line, const Vocabulary& vocab,
                            Side side = Side::source) {
  TokenSequence seq;
  seq.side = side;
  for (const auto& tok : tokenize(line)) {
    seq.ids.push_back(vocab.id_or_nf(tok));
  }
  seq.ids.push_back(vocab.eos_id());
  return seq;
}

// Inverse of encode for display purposes: ranked ids map to their tokens,
// the not-found id renders as the literal "NF", the end-of-sentence id is
// dropped.
inline std::string render_tokens(const std::vector<TokenId>& ids,
                                 const Vocabulary& vocab) {
  std::string out;
  for (TokenId id : ids) {
    if (id == vocab.eos_id()) continue;
    if (!out.empty()) out.push_back(' ');
    if (id == vocab.nf_id()) {
      out += "NF";
    } else {
      out += vocab.token(id);
    }
  }
  return out;
}

// Vocabulary files hold one ranked token per line; the reserved ids are
// implicit.
inline void save_vocabulary(const Vocabulary& vocab, std::ostream& out) {
  for (const auto& tok : vocab.tokens()) out << tok << '\n';
}

inline Vocabulary load_vocabulary(std::istream& in,
                                  std::size_t size_limit = 80000) {
  std::vector<std::string> tokens;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) {
      throw std::runtime_error("vocabulary line " + std::to_string(line_no) +
                               ": empty token");
    }
    tokens.push_back(line);
  }
  return Vocabulary(std::move(tokens), std::max(size_limit, tokens.size()));
}

inline Vocabulary load_vocabulary_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open vocabulary file: " + path);
  return load_vocabulary(in);
}

}  // namespace grumt
