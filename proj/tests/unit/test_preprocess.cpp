#include <doctest.h>

#include <regex>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"
#include "securereqnet/preprocess.hpp"
#include "securereqnet/random.hpp"

using namespace srn;
using Tokens = std::vector<std::string>;

TEST_CASE("tokenize") {
  CHECK(tokenize("The Server CRASHES on 2 connections!") == Tokens{"the", "server", "crashes", "on", "connections"});
  CHECK(tokenize("").empty());
  CHECK(tokenize("SQL-injection (CVE-2019-1234)") == Tokens{"sql", "injection", "cve"});
  CHECK(tokenize("a1b2c") == Tokens{"a", "b", "c"});
  CHECK(tokenize("price: $5 + 10% = ~ok") == Tokens{"price", "ok"});
  CHECK(tokenize("tab\there\nnewline") == Tokens{"tab", "here", "newline"});
}

TEST_CASE("tokenize: Unicode letters survive, other scripts' digits do not") {
  CHECK(tokenize("Ünïcode ÉCOLE") == Tokens{"ünïcode", "école"});
  CHECK(tokenize("Безопасность ошибка") == Tokens{"безопасность", "ошибка"});
  CHECK(tokenize("x٣y") == Tokens{"x", "y"});             // Arabic-Indic digit
  CHECK(tokenize("a\xff" "b") == Tokens{"a", "b"});       // invalid UTF-8 separates
  CHECK(tokenize("e\xcc\x81t\xc3\xa9") == Tokens{"été"});  // NFC composes e + combining acute
}

TEST_CASE("remove_stopwords") {
  const auto& en = StopwordList::english();
  CHECK(remove_stopwords({"the", "server", "crashes", "on", "connections"}, en) ==
        Tokens{"server", "crashes", "connections"});
  CHECK(remove_stopwords({"the", "and", "of"}, en).empty());
  CHECK(remove_stopwords({"the", "server"}, StopwordList{}) == Tokens{"the", "server"});
}

TEST_CASE("stopword list file") {
  const auto list = StopwordList::parse("# comment\nfoo\n\n  bar  \n# another\n");
  CHECK(list.size() == 2);
  CHECK(list.contains("foo"));
  CHECK(list.contains("bar"));
  CHECK_FALSE(list.contains("# comment"));
  CHECK(StopwordList::english().size() == 153);
  CHECK(StopwordList::parse(english_stopwords_text()).checksum() == StopwordList::english().checksum());
  CHECK(StopwordList::parse("b\na\n").checksum() == StopwordList::parse("a\nb\n").checksum());
  CHECK(StopwordList::parse("a\nb\n").checksum() == crc32_of("a\nb\n"));
}

TEST_CASE("preprocess_document") {
  Document d;
  d.id = "x";
  d.text = "Fixes 2 XSS vulnerabilities in the parser";
  const auto seq = preprocess_document(d, StopwordList::english());
  CHECK(seq.doc_id == "x");
  CHECK(seq.tokens == Tokens{"fix", "xss", "vulner", "parser"});
  d.text = "!!! ???";
  CHECK(preprocess_document(d, StopwordList::english()).tokens.empty());
  d.text = "Fixes 2 XSS vulnerabilities in the parser";
  CHECK(preprocess_document(d, StopwordList::english()) == seq);
}

TEST_CASE("preprocess output tokens are letters only and never stopwords") {
  const std::regex letters_only(R"([a-z]+)");
  Rng rng(4);
  const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCXYZ0123456789 .,;:!?-_'\"()[]{}<>/\\@#$%^&*+=|~`\t\n";
  const auto& en = StopwordList::english();
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const auto len = rng.below(80);
    for (std::size_t k = 0; k < len; ++k) text += alphabet[rng.below(alphabet.size())];
    Document d;
    d.text = text + " the and of";
    for (const auto& t : tokenize(d.text)) CHECK(std::regex_match(t, letters_only));
    for (const auto& t : remove_stopwords(tokenize(d.text), en)) CHECK_FALSE(en.contains(t));
    for (const auto& t : preprocess_document(d, en).tokens) {
      CHECK(std::regex_match(t, letters_only));
    }
  }
}

TEST_CASE("build_vocabulary") {
  const std::vector<TokenSequence> corpus = {{"1", {"a", "b", "a"}}, {"2", {"b", "c"}}};
  const auto v = build_vocabulary(corpus, 1);
  CHECK(v.tokens() == Tokens{"a", "b", "c"});
  CHECK(v.counts() == std::vector<std::uint64_t>{2, 2, 1});
  CHECK(v.index_of("b") == 1);
  CHECK(v.index_of("zzz") == Vocabulary::npos);
  CHECK(build_vocabulary(corpus, 2).tokens() == Tokens{"a", "b"});
  CHECK_THROWS_AS(build_vocabulary(corpus, 0), Error);
  CHECK_THROWS_AS(build_vocabulary({}, 1), Error);
  CHECK(build_vocabulary(corpus, 1) == v);
}

TEST_CASE("token cache round-trip") {
  const std::vector<TokenSequence> seqs = {{"a", {"one", "two"}}, {"b", {}}, {"c\"q", {"école"}}};
  std::string content;
  for (const auto& s : seqs) content += token_sequence_to_json_line(s) + "\n";
  CHECK(parse_token_cache(content) == seqs);
  CHECK_THROWS_AS(parse_token_cache(R"({"id":"a"})"), Error);
}
