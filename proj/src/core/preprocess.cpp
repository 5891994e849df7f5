#include "securereqnet/preprocess.hpp"

#include <unicode/uchar.h>
#include <unicode/unorm2.h>
#include <unicode/ustring.h>
#include <unicode/utf8.h>

#include <algorithm>
#include <map>

#include <json.hpp>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"
#include "securereqnet/stemmer.hpp"

namespace srn {
namespace detail {
extern const std::string_view kEnglishStopwords;
}

namespace {

// UTF-8 -> NFC-normalized UTF-16. Invalid input bytes become U+FFFD.
std::u16string to_nfc_utf16(std::string_view text) {
  UErrorCode status = U_ZERO_ERROR;
  int32_t needed = 0;
  u_strFromUTF8WithSub(nullptr, 0, &needed, text.data(), static_cast<int32_t>(text.size()), 0xFFFD, nullptr,
                       &status);
  status = U_ZERO_ERROR;
  std::u16string utf16(static_cast<std::size_t>(needed), u'\0');
  u_strFromUTF8WithSub(utf16.data(), needed, nullptr, text.data(), static_cast<int32_t>(text.size()), 0xFFFD,
                       nullptr, &status);
  if (U_FAILURE(status)) return {};

  status = U_ZERO_ERROR;
  const UNormalizer2* nfc = unorm2_getNFCInstance(&status);
  if (U_FAILURE(status)) return utf16;
  status = U_ZERO_ERROR;
  const int32_t len = unorm2_normalize(nfc, utf16.data(), needed, nullptr, 0, &status);
  std::u16string normalized(static_cast<std::size_t>(len), u'\0');
  status = U_ZERO_ERROR;
  unorm2_normalize(nfc, utf16.data(), needed, normalized.data(), len, &status);
  if (U_FAILURE(status)) return utf16;
  return normalized;
}

void append_utf8(std::string& out, UChar32 c) {
  char buf[U8_MAX_LENGTH];
  int32_t n = 0;
  U8_APPEND_UNSAFE(buf, n, c);
  out.append(buf, static_cast<std::size_t>(n));
}

}  // namespace

StopwordList::StopwordList(std::vector<std::string> words) : words_(words.begin(), words.end()) {}

StopwordList StopwordList::parse(std::string_view content) {
  std::vector<std::string> words;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.remove_suffix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front()))) line.remove_prefix(1);
    if (!line.empty()) words.emplace_back(line);
    if (end == content.size()) break;
  }
  return StopwordList(std::move(words));
}

StopwordList StopwordList::load(const std::filesystem::path& path) { return parse(read_file(path)); }

const StopwordList& StopwordList::english() {
  static const StopwordList list = parse(detail::kEnglishStopwords);
  return list;
}

std::string_view english_stopwords_text() { return detail::kEnglishStopwords; }

bool StopwordList::contains(std::string_view token) const { return words_.count(std::string(token)) > 0; }

std::uint32_t StopwordList::checksum() const {
  std::vector<std::string> sorted(words_.begin(), words_.end());
  std::sort(sorted.begin(), sorted.end());
  std::string joined;
  for (const auto& w : sorted) {
    joined += w;
    joined += '\n';
  }
  return crc32_of(joined);
}

std::vector<std::string> tokenize(std::string_view text) {
  const std::u16string utf16 = to_nfc_utf16(text);
  std::vector<std::string> tokens;
  std::string current;
  int32_t i = 0;
  const auto length = static_cast<int32_t>(utf16.size());
  while (i < length) {
    UChar32 c;
    U16_NEXT(utf16.data(), i, length, c);
    if (u_isalpha(c)) {
      append_utf8(current, u_tolower(c));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

std::vector<std::string> remove_stopwords(const std::vector<std::string>& tokens, const StopwordList& stoplist) {
  std::vector<std::string> out;
  out.reserve(tokens.size());
  std::copy_if(tokens.begin(), tokens.end(), std::back_inserter(out),
               [&](const std::string& t) { return !stoplist.contains(t); });
  return out;
}

std::string stem(std::string_view token) {
  const bool ascii = std::all_of(token.begin(), token.end(), [](char c) { return static_cast<unsigned char>(c) < 0x80; });
  return ascii ? stem_english(token) : std::string(token);
}

TokenSequence preprocess_document(const Document& doc, const StopwordList& stoplist) {
  TokenSequence seq{doc.id, remove_stopwords(tokenize(doc.text), stoplist)};
  for (auto& t : seq.tokens) t = stem(t);
  return seq;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts, std::uint64_t min_count)
    : tokens_(std::move(tokens)), counts_(std::move(counts)), min_count_(min_count) {
  if (tokens_.size() != counts_.size()) fail(ErrorKind::Format, "vocabulary: token/count length mismatch");
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], i).second) fail(ErrorKind::Format, "vocabulary: duplicate token '" + tokens_[i] + "'");
  }
}

std::size_t Vocabulary::index_of(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  return it == index_.end() ? npos : it->second;
}

Vocabulary build_vocabulary(const std::vector<TokenSequence>& corpus, std::uint64_t min_count) {
  if (min_count < 1) fail(ErrorKind::Usage, "build_vocabulary: min_count must be >= 1");
  if (corpus.empty()) fail(ErrorKind::Data, "build_vocabulary: empty corpus");
  std::unordered_map<std::string, std::uint64_t> counts;
  for (const auto& seq : corpus) {
    for (const auto& t : seq.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, std::uint64_t>> entries;
  for (auto& [token, count] : counts) {
    if (count >= min_count) entries.emplace_back(token, count);
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> tokens;
  std::vector<std::uint64_t> token_counts;
  for (auto& [token, count] : entries) {
    tokens.push_back(std::move(token));
    token_counts.push_back(count);
  }
  return Vocabulary(std::move(tokens), std::move(token_counts), min_count);
}

std::string token_sequence_to_json_line(const TokenSequence& seq) {
  nlohmann::ordered_json j;
  j["id"] = seq.doc_id;
  j["tokens"] = seq.tokens;
  return j.dump();
}

std::vector<TokenSequence> parse_token_cache(std::string_view content) {
  std::vector<TokenSequence> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      out.push_back({j.at("id").get<std::string>(), j.at("tokens").get<std::vector<std::string>>()});
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::Format, "token cache line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

void save_token_cache(const std::vector<TokenSequence>& seqs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& s : seqs) {
    out += token_sequence_to_json_line(s);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<TokenSequence> load_token_cache(const std::filesystem::path& path) {
  return parse_token_cache(read_file(path));
}

}  // namespace srn
