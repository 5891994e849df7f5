#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srn {

enum class Label { SR, NonSR };

enum class Source { CVE, GitLabIssue, GitHubIssue, Wikipedia, Other };

/// Seconds since the Unix epoch, UTC.
using Timestamp = std::int64_t;

struct Document {
  std::string id;
  std::string text;
  std::optional<Label> label;  // absent for embedding-only text (Wikipedia)
  std::optional<Timestamp> created_at;
  Source source = Source::Other;

  bool operator==(const Document&) const = default;
};

struct SplitRatios {
  double train = 0.70;
  double validation = 0.20;
  double test = 0.10;
};

struct SplitBundle {
  std::vector<Document> train;
  std::vector<Document> validation;
  std::vector<Document> test;
  std::uint64_t seed = 0;
};

struct NvdParseResult {
  std::vector<Document> documents;
  std::size_t skipped = 0;  // items without an English description
};

std::string_view to_string(Label label);
std::string_view to_string(Source source);
std::optional<Label> parse_label(std::string_view text);
Source parse_source(std::string_view text);

/// Accepts "YYYY-MM-DD", "YYYY-MM-DDTHH:MM[:SS[.fff]]" with optional "Z" or
/// "+00:00" suffix.
std::optional<Timestamp> parse_timestamp(std::string_view text);
std::string format_timestamp(Timestamp ts);

/// NVD 1.1 JSON data feed ("CVE_Items" array).
NvdParseResult parse_nvd_feed(std::string_view feed_content);

/// Newline-delimited corpus records. Blank lines are ignored.
std::vector<Document> parse_corpus_jsonl(std::string_view content);
std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path);

std::string document_to_json_line(const Document& doc);
void save_corpus_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path);

/// All minority-label documents plus an equal-size uniform sample of the
/// majority label, shuffled.
std::vector<Document> balance_classes(const std::vector<Document>& docs, std::uint64_t seed);

/// Validation and test sizes are floored; the remainder goes to train.
/// Temporal splits take the newest documents as test, strictly newer than
/// everything else.
SplitBundle make_split(const std::vector<Document>& docs, std::uint64_t seed, bool temporal,
                       const SplitRatios& ratios = {});

bool check_temporal(const SplitBundle& split);

}  // namespace srn
