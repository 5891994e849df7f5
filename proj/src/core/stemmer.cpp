#include "securereqnet/stemmer.hpp"

#include <algorithm>
#include <array>
#include <utility>

namespace srn {
namespace {

bool is_vowel(char c) {
  switch (c) {
    case 'a': case 'e': case 'i': case 'o': case 'u': case 'y':
      return true;
    default:
      return false;
  }
}

bool ends_with(const std::string& w, std::string_view s) {
  return w.size() >= s.size() && std::string_view(w).substr(w.size() - s.size()) == s;
}

// Longest entry of `table` that is a suffix of `w`, or -1.
template <std::size_t N>
int longest_suffix(const std::string& w, const std::array<std::string_view, N>& table) {
  int best = -1;
  std::size_t best_len = 0;
  for (std::size_t i = 0; i < N; ++i) {
    if (table[i].size() > best_len && ends_with(w, table[i])) {
      best = static_cast<int>(i);
      best_len = table[i].size();
    }
  }
  return best;
}

// Short syllable ending at `end` (exclusive).
bool short_syllable(const std::string& w, std::size_t end) {
  if (end >= 3) {
    const char last = w[end - 1];
    return !is_vowel(last) && last != 'w' && last != 'x' && last != 'Y' &&
           is_vowel(w[end - 2]) && !is_vowel(w[end - 3]);
  }
  return end == 2 && !is_vowel(w[1]) && is_vowel(w[0]);
}

void replace_suffix(std::string& w, std::size_t suffix_len, std::string_view with) {
  w.resize(w.size() - suffix_len);
  w += with;
}

constexpr std::array<std::pair<std::string_view, std::string_view>, 18> kException1{{
    {"skis", "ski"},     {"skies", "sky"},    {"dying", "die"},   {"lying", "lie"},
    {"tying", "tie"},    {"idly", "idl"},     {"gently", "gentl"}, {"ugly", "ugli"},
    {"early", "earli"},  {"only", "onli"},    {"singly", "singl"}, {"sky", "sky"},
    {"news", "news"},    {"howe", "howe"},    {"atlas", "atlas"}, {"cosmos", "cosmos"},
    {"bias", "bias"},    {"andes", "andes"},
}};

constexpr std::array<std::string_view, 8> kException2{
    "inning", "outing", "canning", "herring", "earring", "proceed", "exceed", "succeed"};

class Porter2 {
 public:
  explicit Porter2(std::string w) : w_(std::move(w)) {}

  std::string run() {
    prelude();
    mark_regions();
    step_1a();
    if (std::find(kException2.begin(), kException2.end(), w_) == kException2.end()) {
      step_1b();
      step_1c();
      step_2();
      step_3();
      step_4();
      step_5();
    }
    std::replace(w_.begin(), w_.end(), 'Y', 'y');
    return std::move(w_);
  }

 private:
  std::size_t start_of(std::string_view suffix) const { return w_.size() - suffix.size(); }
  bool in_r1(std::string_view suffix) const { return start_of(suffix) >= p1_; }
  bool in_r2(std::string_view suffix) const { return start_of(suffix) >= p2_; }

  void prelude() {
    if (!w_.empty() && w_[0] == '\'') w_.erase(0, 1);
    if (!w_.empty() && w_[0] == 'y') w_[0] = 'Y';
    for (std::size_t i = 1; i < w_.size(); ++i) {
      if (w_[i] == 'y' && is_vowel(w_[i - 1])) w_[i] = 'Y';
    }
  }

  // Position just past the first non-vowel that follows a vowel, scanning from `from`.
  std::size_t region_after(std::size_t from) const {
    std::size_t i = from;
    while (i < w_.size() && !is_vowel(w_[i])) ++i;
    if (i == w_.size()) return w_.size();
    ++i;
    while (i < w_.size() && is_vowel(w_[i])) ++i;
    if (i == w_.size()) return w_.size();
    return i + 1;
  }

  void mark_regions() {
    p1_ = w_.size();
    for (std::string_view prefix : {"gener", "commun", "arsen"}) {
      if (w_.starts_with(prefix)) {
        p1_ = prefix.size();
        p2_ = region_after(p1_);
        return;
      }
    }
    p1_ = region_after(0);
    p2_ = region_after(p1_);
  }

  void step_1a() {
    static constexpr std::array<std::string_view, 3> apostrophes{"'", "'s'", "'s"};
    if (int i = longest_suffix(w_, apostrophes); i >= 0) {
      w_.resize(start_of(apostrophes[i]));
    }
    static constexpr std::array<std::string_view, 6> table{"sses", "ied", "ies", "s", "us", "ss"};
    const int i = longest_suffix(w_, table);
    if (i < 0) return;
    const std::string_view suffix = table[i];
    if (suffix == "sses") {
      replace_suffix(w_, 4, "ss");
    } else if (suffix == "ied" || suffix == "ies") {
      replace_suffix(w_, 3, start_of(suffix) >= 2 ? "i" : "ie");
    } else if (suffix == "s") {
      const std::size_t start = start_of(suffix);
      if (start < 1) return;
      // A vowel somewhere before the letter preceding the s.
      for (std::size_t j = 0; j + 1 < start; ++j) {
        if (is_vowel(w_[j])) {
          w_.pop_back();
          return;
        }
      }
    }
  }

  void step_1b() {
    static constexpr std::array<std::string_view, 6> table{"eed", "eedly", "ed", "edly", "ing", "ingly"};
    const int i = longest_suffix(w_, table);
    if (i < 0) return;
    const std::string_view suffix = table[i];
    const std::size_t start = start_of(suffix);
    if (suffix == "eed" || suffix == "eedly") {
      if (start >= p1_) replace_suffix(w_, suffix.size(), "ee");
      return;
    }
    if (std::none_of(w_.begin(), w_.begin() + static_cast<std::ptrdiff_t>(start), is_vowel)) return;
    w_.resize(start);
    if (ends_with(w_, "at") || ends_with(w_, "bl") || ends_with(w_, "iz")) {
      w_ += 'e';
      return;
    }
    for (std::string_view dbl : {"bb", "dd", "ff", "gg", "mm", "nn", "pp", "rr", "tt"}) {
      if (ends_with(w_, dbl)) {
        w_.pop_back();
        return;
      }
    }
    if (w_.size() == p1_ && short_syllable(w_, w_.size())) w_ += 'e';
  }

  void step_1c() {
    const std::size_t n = w_.size();
    if (n < 3 || (w_[n - 1] != 'y' && w_[n - 1] != 'Y')) return;
    if (!is_vowel(w_[n - 2])) w_[n - 1] = 'i';
  }

  void step_2() {
    static constexpr std::array<std::string_view, 24> table{
        "tional", "enci",  "anci",   "abli",    "entli",   "izer",    "ization", "ational",
        "ation",  "ator",  "alism",  "aliti",   "alli",    "fulness", "ousli",   "ousness",
        "iveness", "iviti", "biliti", "bli",    "ogi",     "fulli",   "lessli",  "li"};
    static constexpr std::array<std::string_view, 24> replacement{
        "tion", "ence", "ance", "able", "ent", "ize", "ize", "ate",
        "ate",  "ate",  "al",   "al",   "al",  "ful", "ous", "ous",
        "ive",  "ive",  "ble",  "ble",  "og",  "ful", "less", ""};
    const int i = longest_suffix(w_, table);
    if (i < 0 || !in_r1(table[i])) return;
    const std::string_view suffix = table[i];
    const std::size_t start = start_of(suffix);
    if (suffix == "ogi") {
      if (start == 0 || w_[start - 1] != 'l') return;
    } else if (suffix == "li") {
      if (start == 0) return;
      constexpr std::string_view valid_li = "cdeghkmnrt";
      if (valid_li.find(w_[start - 1]) == std::string_view::npos) return;
    }
    replace_suffix(w_, suffix.size(), replacement[i]);
  }

  void step_3() {
    static constexpr std::array<std::string_view, 9> table{
        "tional", "ational", "alize", "icate", "iciti", "ical", "ful", "ness", "ative"};
    static constexpr std::array<std::string_view, 9> replacement{
        "tion", "ate", "al", "ic", "ic", "ic", "", "", ""};
    const int i = longest_suffix(w_, table);
    if (i < 0 || !in_r1(table[i])) return;
    if (table[i] == "ative" && !in_r2(table[i])) return;
    replace_suffix(w_, table[i].size(), replacement[i]);
  }

  void step_4() {
    static constexpr std::array<std::string_view, 18> table{
        "al", "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement",
        "ment", "ent", "ism", "ate", "iti", "ous",  "ive",  "ize", "ion"};
    const int i = longest_suffix(w_, table);
    if (i < 0 || !in_r2(table[i])) return;
    const std::size_t start = start_of(table[i]);
    if (table[i] == "ion" && (start == 0 || (w_[start - 1] != 's' && w_[start - 1] != 't'))) return;
    w_.resize(start);
  }

  void step_5() {
    if (w_.empty()) return;
    const std::size_t start = w_.size() - 1;
    if (w_.back() == 'e') {
      if (start >= p2_ || (start >= p1_ && !short_syllable(w_, start))) w_.pop_back();
    } else if (w_.back() == 'l') {
      if (start >= p2_ && start > 0 && w_[start - 1] == 'l') w_.pop_back();
    }
  }

  std::string w_;
  std::size_t p1_ = 0;
  std::size_t p2_ = 0;
};

}  // namespace

std::string stem_english(std::string_view word) {
  for (const auto& [form, stemmed] : kException1) {
    if (word == form) return std::string(stemmed);
  }
  if (word.size() < 3) return std::string(word);
  return Porter2(std::string(word)).run();
}

}  // namespace srn
