#include "securereqnet/corpus.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <json.hpp>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"
#include "securereqnet/random.hpp"

namespace srn {
namespace {

using nlohmann::json;

bool is_blank(std::string_view s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::string lower_ascii(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

bool read_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > s.size()) return false;
  const char* first = s.data() + pos;
  const char* last = first + len;
  if (!std::all_of(first, last, [](char c) { return c >= '0' && c <= '9'; })) return false;
  return std::from_chars(first, last, out).ec == std::errc{};
}

// Splits `docs` by label, in input order.
std::array<std::vector<Document>, 2> by_label(const std::vector<Document>& docs) {
  std::array<std::vector<Document>, 2> groups;
  for (const auto& d : docs) {
    if (!d.label) fail(ErrorKind::Data, "document '" + d.id + "' has no label");
    groups[*d.label == Label::SR ? 0 : 1].push_back(d);
  }
  return groups;
}

// Largest-remainder allocation of `k` items across groups proportional to
// their sizes, capped by what each group still has.
std::array<std::size_t, 2> allocate(std::size_t k, const std::array<std::size_t, 2>& sizes,
                                    const std::array<std::size_t, 2>& available) {
  const std::size_t total = sizes[0] + sizes[1];
  std::array<std::size_t, 2> quota{0, 0};
  if (total == 0 || k == 0) return quota;
  std::array<double, 2> frac{};
  std::size_t assigned = 0;
  for (int g = 0; g < 2; ++g) {
    const double exact = static_cast<double>(k) * static_cast<double>(sizes[g]) / static_cast<double>(total);
    quota[g] = std::min(static_cast<std::size_t>(std::floor(exact)), available[g]);
    frac[g] = exact - std::floor(exact);
    assigned += quota[g];
  }
  while (assigned < k) {
    int pick = frac[0] >= frac[1] ? 0 : 1;
    if (quota[pick] >= available[pick]) pick = 1 - pick;
    if (quota[pick] >= available[pick]) break;
    ++quota[pick];
    frac[pick] = -1.0;
    ++assigned;
  }
  return quota;
}

std::size_t floored_share(double ratio, std::size_t n) {
  return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
}

// Moves a stratified random sample of `k` documents out of `pool`.
std::vector<Document> take_stratified(std::array<std::vector<Document>, 2>& pool, std::size_t k,
                                      const std::array<std::size_t, 2>& reference_sizes) {
  const auto quota = allocate(k, reference_sizes, {pool[0].size(), pool[1].size()});
  std::vector<Document> out;
  for (int g = 0; g < 2; ++g) {
    auto& group = pool[g];
    std::move(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(quota[g]), std::back_inserter(out));
    group.erase(group.begin(), group.begin() + static_cast<std::ptrdiff_t>(quota[g]));
  }
  return out;
}

void validate_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.validation < 0 || r.test < 0 ||
      std::abs(r.train + r.validation + r.test - 1.0) > 1e-9) {
    fail(ErrorKind::Usage, "split ratios must be non-negative and sum to 1");
  }
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::SR ? "sr" : "nonsr"; }

std::string_view to_string(Source source) {
  switch (source) {
    case Source::CVE: return "cve";
    case Source::GitLabIssue: return "gitlab";
    case Source::GitHubIssue: return "github";
    case Source::Wikipedia: return "wikipedia";
    case Source::Other: break;
  }
  return "other";
}

std::optional<Label> parse_label(std::string_view text) {
  const std::string s = lower_ascii(text);
  if (s == "sr") return Label::SR;
  if (s == "nonsr") return Label::NonSR;
  return std::nullopt;
}

Source parse_source(std::string_view text) {
  const std::string s = lower_ascii(text);
  if (s == "cve" || s == "nvd") return Source::CVE;
  if (s == "gitlab") return Source::GitLabIssue;
  if (s == "github") return Source::GitHubIssue;
  if (s == "wikipedia") return Source::Wikipedia;
  return Source::Other;
}

std::optional<Timestamp> parse_timestamp(std::string_view s) {
  using namespace std::chrono;
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  if (!read_int(s, 0, 4, y) || s.size() < 10 || s[4] != '-' || !read_int(s, 5, 2, mo) || s[7] != '-' ||
      !read_int(s, 8, 2, d)) {
    return std::nullopt;
  }
  std::size_t pos = 10;
  if (pos < s.size()) {
    if (s[pos] != 'T' && s[pos] != 't' && s[pos] != ' ') return std::nullopt;
    if (!read_int(s, pos + 1, 2, h) || s.size() < pos + 6 || s[pos + 3] != ':' || !read_int(s, pos + 4, 2, mi)) {
      return std::nullopt;
    }
    pos += 6;
    if (pos < s.size() && s[pos] == ':') {
      if (!read_int(s, pos + 1, 2, sec)) return std::nullopt;
      pos += 3;
      if (pos < s.size() && s[pos] == '.') {
        ++pos;
        const std::size_t digits = pos;
        while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
        if (pos == digits) return std::nullopt;
      }
    }
    const std::string_view zone = s.substr(pos);
    if (!(zone.empty() || zone == "Z" || zone == "z" || zone == "+00:00" || zone == "-00:00")) {
      return std::nullopt;
    }
  }
  const year_month_day date{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!date.ok() || h > 23 || mi > 59 || sec > 60) return std::nullopt;
  const auto days = sys_days{date}.time_since_epoch().count();
  return static_cast<Timestamp>(days) * 86400 + h * 3600 + mi * 60 + sec;
}

std::string format_timestamp(Timestamp ts) {
  using namespace std::chrono;
  const auto day_count = static_cast<int>(ts >= 0 ? ts / 86400 : (ts - 86399) / 86400);
  const Timestamp rem = ts - static_cast<Timestamp>(day_count) * 86400;
  const year_month_day date{sys_days{days{day_count}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()),
                static_cast<int>(rem / 3600), static_cast<int>(rem % 3600 / 60), static_cast<int>(rem % 60));
  return buf;
}

NvdParseResult parse_nvd_feed(std::string_view feed_content) {
  json feed;
  try {
    feed = json::parse(feed_content);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Format, "NVD feed: malformed JSON at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!feed.is_object()) fail(ErrorKind::Format, "NVD feed: top level must be an object");
  if (auto v = feed.find("CVE_data_version"); v != feed.end() && *v != "4.0") {
    fail(ErrorKind::Format, "NVD feed: unsupported CVE_data_version " + v->dump() + " (expected \"4.0\")");
  }
  const auto items = feed.find("CVE_Items");
  if (items == feed.end() || !items->is_array()) {
    fail(ErrorKind::Format, "NVD feed: missing field 'CVE_Items'");
  }

  NvdParseResult result;
  std::size_t index = 0;
  for (const auto& item : *items) {
    const std::string where = "NVD feed item " + std::to_string(index++);
    const json* id = nullptr;
    if (item.contains("cve") && item["cve"].contains("CVE_data_meta")) {
      const auto& meta = item["cve"]["CVE_data_meta"];
      if (meta.contains("ID") && meta["ID"].is_string()) id = &meta["ID"];
    }
    if (!id) fail(ErrorKind::Format, where + ": missing field 'cve.CVE_data_meta.ID'");

    const json* description = nullptr;
    const auto& cve = item["cve"];
    if (cve.contains("description") && cve["description"].contains("description_data")) {
      for (const auto& entry : cve["description"]["description_data"]) {
        if (entry.value("lang", "") == "en" && entry.contains("value") && entry["value"].is_string() &&
            !is_blank(entry["value"].get_ref<const std::string&>())) {
          description = &entry["value"];
          break;
        }
      }
    }
    if (!description) {
      ++result.skipped;
      continue;
    }
    if (!item.contains("publishedDate") || !item["publishedDate"].is_string()) {
      fail(ErrorKind::Format, where + ": missing field 'publishedDate'");
    }
    const auto published = parse_timestamp(item["publishedDate"].get<std::string>());
    if (!published) fail(ErrorKind::Format, where + ": invalid publishedDate " + item["publishedDate"].dump());

    result.documents.push_back(Document{
        .id = id->get<std::string>(),
        .text = description->get<std::string>(),
        .label = Label::SR,
        .created_at = published,
        .source = Source::CVE,
    });
  }
  return result;
}

std::vector<Document> parse_corpus_jsonl(std::string_view content) {
  std::vector<Document> docs;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    const std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (is_blank(line)) continue;

    const std::string where = "line " + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      fail(ErrorKind::Format, where + ": malformed JSON at byte " + std::to_string(e.byte));
    }
    if (!record.is_object()) fail(ErrorKind::Format, where + ": record must be a JSON object");
    auto required_string = [&](const char* field) -> std::string {
      const auto it = record.find(field);
      if (it == record.end()) fail(ErrorKind::Format, where + ": missing required field '" + field + "'");
      if (!it->is_string()) fail(ErrorKind::Format, where + ": field '" + field + "' must be a string");
      return it->get<std::string>();
    };

    Document doc;
    doc.id = required_string("id");
    doc.text = required_string("text");
    if (is_blank(doc.text)) fail(ErrorKind::Data, where + ": field 'text' is empty");
    doc.source = parse_source(required_string("source"));
    if (auto it = record.find("label"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) fail(ErrorKind::Format, where + ": field 'label' must be a string");
      doc.label = parse_label(it->get<std::string>());
      if (!doc.label) fail(ErrorKind::Data, where + ": invalid label " + it->dump() + " (expected \"sr\" or \"nonsr\")");
    }
    if (auto it = record.find("created_at"); it != record.end() && !it->is_null()) {
      if (!it->is_string()) fail(ErrorKind::Format, where + ": field 'created_at' must be a string");
      doc.created_at = parse_timestamp(it->get<std::string>());
      if (!doc.created_at) fail(ErrorKind::Data, where + ": invalid timestamp " + it->dump());
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> load_corpus_jsonl(const std::filesystem::path& path) {
  try {
    return parse_corpus_jsonl(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::string document_to_json_line(const Document& doc) {
  nlohmann::ordered_json j;
  j["id"] = doc.id;
  j["text"] = doc.text;
  if (doc.label) j["label"] = to_string(*doc.label);
  if (doc.created_at) j["created_at"] = format_timestamp(*doc.created_at);
  j["source"] = to_string(doc.source);
  return j.dump();
}

void save_corpus_jsonl(const std::vector<Document>& docs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : docs) {
    out += document_to_json_line(d);
    out += '\n';
  }
  write_file_atomic(path, out);
}

std::vector<Document> balance_classes(const std::vector<Document>& docs, std::uint64_t seed) {
  auto groups = by_label(docs);
  if (groups[0].empty() || groups[1].empty()) {
    fail(ErrorKind::Data, "balance_classes: both SR and non-SR documents are required");
  }
  Rng rng(seed);
  const std::size_t keep = std::min(groups[0].size(), groups[1].size());
  auto& majority = groups[0].size() > keep ? groups[0] : groups[1];
  rng.shuffle(std::span(majority));
  majority.resize(keep);

  std::vector<Document> out = std::move(groups[0]);
  std::move(groups[1].begin(), groups[1].end(), std::back_inserter(out));
  rng.shuffle(std::span(out));
  return out;
}

SplitBundle make_split(const std::vector<Document>& docs, std::uint64_t seed, bool temporal,
                       const SplitRatios& ratios) {
  validate_ratios(ratios);
  const std::size_t n = docs.size();
  if (n < 10) fail(ErrorKind::Data, "make_split: need at least 10 documents, got " + std::to_string(n));
  {
    std::set<std::string_view> ids;
    for (const auto& d : docs) {
      if (!d.label) fail(ErrorKind::Data, "make_split: document '" + d.id + "' has no label");
      if (!ids.insert(d.id).second) fail(ErrorKind::Data, "make_split: duplicate id '" + d.id + "'");
    }
  }

  Rng rng(seed);
  SplitBundle bundle;
  bundle.seed = seed;
  std::size_t n_test = floored_share(ratios.test, n);
  const std::size_t n_val = floored_share(ratios.validation, n);

  std::vector<Document> rest;
  if (temporal) {
    std::vector<Document> sorted = docs;
    for (const auto& d : sorted) {
      if (!d.created_at) fail(ErrorKind::Data, "make_split: document '" + d.id + "' has no timestamp");
    }
    std::stable_sort(sorted.begin(), sorted.end(), [](const Document& a, const Document& b) {
      return std::tie(*a.created_at, a.id) < std::tie(*b.created_at, b.id);
    });
    // Ties at the boundary would break strict ordering; shrink the test slice.
    while (n_test > 0 && n_test < n && *sorted[n - n_test].created_at <= *sorted[n - n_test - 1].created_at) {
      --n_test;
    }
    if (n_test == 0 && ratios.test > 0) {
      fail(ErrorKind::Data, "make_split: no strictly-newest documents available for a temporal test set");
    }
    bundle.test.assign(sorted.end() - static_cast<std::ptrdiff_t>(n_test), sorted.end());
    rest.assign(sorted.begin(), sorted.end() - static_cast<std::ptrdiff_t>(n_test));
    auto groups = by_label(rest);
    rng.shuffle(std::span(groups[0]));
    rng.shuffle(std::span(groups[1]));
    const std::array<std::size_t, 2> sizes{groups[0].size(), groups[1].size()};
    bundle.validation = take_stratified(groups, n_val, sizes);
    bundle.train = std::move(groups[0]);
    std::move(groups[1].begin(), groups[1].end(), std::back_inserter(bundle.train));
  } else {
    auto groups = by_label(docs);
    rng.shuffle(std::span(groups[0]));
    rng.shuffle(std::span(groups[1]));
    const std::array<std::size_t, 2> sizes{groups[0].size(), groups[1].size()};
    bundle.test = take_stratified(groups, n_test, sizes);
    bundle.validation = take_stratified(groups, n_val, sizes);
    bundle.train = std::move(groups[0]);
    std::move(groups[1].begin(), groups[1].end(), std::back_inserter(bundle.train));
  }
  rng.shuffle(std::span(bundle.train));
  rng.shuffle(std::span(bundle.validation));
  rng.shuffle(std::span(bundle.test));
  return bundle;
}

bool check_temporal(const SplitBundle& split) {
  if (split.test.empty()) fail(ErrorKind::Data, "check_temporal: empty test partition");
  auto stamp = [](const Document& d) {
    if (!d.created_at) fail(ErrorKind::Data, "check_temporal: document '" + d.id + "' has no timestamp");
    return *d.created_at;
  };
  Timestamp test_min = stamp(split.test.front());
  for (const auto& d : split.test) test_min = std::min(test_min, stamp(d));
  for (const auto* part : {&split.train, &split.validation}) {
    for (const auto& d : *part) {
      if (stamp(d) >= test_min) return false;
    }
  }
  return true;
}

}  // namespace srn
