#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "securereqnet/corpus.hpp"

namespace srn {

struct TokenSequence {
  std::string doc_id;
  std::vector<std::string> tokens;

  bool operator==(const TokenSequence&) const = default;
};

class StopwordList {
 public:
  StopwordList() = default;
  explicit StopwordList(std::vector<std::string> words);

  /// One token per line; `#` starts a comment; blank lines ignored.
  static StopwordList parse(std::string_view content);
  static StopwordList load(const std::filesystem::path& path);

  /// The shipped English list.
  static const StopwordList& english();

  bool contains(std::string_view token) const;
  std::size_t size() const { return words_.size(); }
  /// CRC-32 over the sorted entries, each followed by a newline.
  std::uint32_t checksum() const;

 private:
  std::unordered_set<std::string> words_;
};

/// Raw text of the shipped stopword file.
std::string_view english_stopwords_text();

/// Lowercases and splits on everything that is not a letter (digits,
/// punctuation, symbols, whitespace, controls). Input is UTF-8; invalid
/// sequences act as separators.
std::vector<std::string> tokenize(std::string_view text);

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const StopwordList& stoplist);

/// Snowball English stem for ASCII tokens; tokens containing non-ASCII
/// letters are returned unchanged.
std::string stem(std::string_view token);

TokenSequence preprocess_document(const Document& doc, const StopwordList& stoplist);

class Vocabulary {
 public:
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  Vocabulary() = default;
  /// Tokens must be unique; indices follow the given order.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts, std::uint64_t min_count);

  std::size_t size() const { return tokens_.size(); }
  std::size_t index_of(std::string_view token) const;
  bool contains(std::string_view token) const { return index_of(token) != npos; }
  const std::string& token(std::size_t index) const { return tokens_.at(index); }
  std::uint64_t count(std::size_t index) const { return counts_.at(index); }
  std::uint64_t min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::vector<std::uint64_t>& counts() const { return counts_; }

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && counts_ == other.counts_ && min_count_ == other.min_count_;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t min_count_ = 1;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Indices by descending count, ties broken lexicographically.
Vocabulary build_vocabulary(const std::vector<TokenSequence>& corpus, std::uint64_t min_count = 1);

std::string token_sequence_to_json_line(const TokenSequence& seq);
std::vector<TokenSequence> parse_token_cache(std::string_view content);
void save_token_cache(const std::vector<TokenSequence>& seqs, const std::filesystem::path& path);
std::vector<TokenSequence> load_token_cache(const std::filesystem::path& path);

}  // namespace srn
