#include <doctest.h>

#include <fstream>
#include <sstream>
#include <string>

#include "securereqnet/preprocess.hpp"
#include "securereqnet/stemmer.hpp"

using srn::stem_english;

TEST_CASE("stem: documented examples") {
  CHECK(stem_english("connections") == "connect");
  CHECK(stem_english("security") == "secur");
  CHECK(stem_english("vulnerabilities") == "vulner");
  CHECK(stem_english("fixes") == "fix");
  CHECK(stem_english("x") == "x");
  CHECK(stem_english("") == "");
}

TEST_CASE("stem: special cases of the algorithm") {
  CHECK(stem_english("skies") == "sky");
  CHECK(stem_english("news") == "news");
  CHECK(stem_english("generously") == "generous");
  CHECK(stem_english("communication") == "communic");
  CHECK(stem_english("arsenal") == "arsenal");
  CHECK(stem_english("succeed") == "succeed");
  CHECK(stem_english("dying") == "die");
  CHECK(stem_english("parser's") == "parser");
}

TEST_CASE("stem: published English vocabulary") {
  std::ifstream in(std::string(SRN_TEST_DATA_DIR) + "/snowball_english_voc.txt");
  REQUIRE(in);
  std::string word, expected;
  std::size_t total = 0, mismatches = 0;
  while (in >> word >> expected) {
    ++total;
    if (stem_english(word) != expected) {
      if (++mismatches <= 10) MESSAGE(word << " -> " << stem_english(word) << " (expected " << expected << ")");
    }
  }
  CHECK(total > 29000);
  CHECK(mismatches == 0);
}

TEST_CASE("stem wrapper leaves non-ASCII tokens alone") {
  CHECK(srn::stem("running") == "run");
  CHECK(srn::stem("écoles") == "écoles");
  CHECK(srn::stem("безопасность") == "безопасность");
}
