#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "gradcheck.hpp"
#include "securereqnet/embedding.hpp"
#include "securereqnet/error.hpp"
#include "securereqnet/random.hpp"

using namespace srn;
using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

namespace {

EmbeddingModel planted(const std::vector<std::string>& tokens, std::size_t dim, std::vector<double> vectors) {
  return EmbeddingModel(Vocabulary(tokens, std::vector<std::uint64_t>(tokens.size(), 1), 1), dim, std::move(vectors));
}

std::vector<TokenSequence> repeated(const std::vector<std::string>& sentence, std::size_t times) {
  std::vector<TokenSequence> corpus;
  for (std::size_t i = 0; i < times; ++i) corpus.push_back({std::to_string(i), sentence});
  return corpus;
}

double objective(std::span<const double> v, const std::vector<std::vector<double>>& u) {
  auto log_sigmoid = [](double x) { return -std::log1p(std::exp(-x)); };
  double loss = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    double d = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) d += u[j][i] * v[i];
    loss -= j == 0 ? log_sigmoid(d) : log_sigmoid(-d);
  }
  return loss;
}

}  // namespace

TEST_CASE("generate_pairs") {
  const std::vector<std::size_t> abc = {0, 1, 2};
  CHECK(generate_pairs(abc, 1) == Pairs{{0, 1}, {1, 0}, {1, 2}, {2, 1}});
  CHECK(generate_pairs(abc, 2) == Pairs{{0, 1}, {0, 2}, {1, 0}, {1, 2}, {2, 0}, {2, 1}});
  CHECK(generate_pairs(std::vector<std::size_t>{0}, 3).empty());
}

TEST_CASE("negative-sampling gradients match central differences") {
  Rng rng(21);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t dim = 1 + rng.below(12);
    const std::size_t k = 1 + rng.below(6);
    std::vector<double> v(dim);
    for (auto& x : v) x = rng.uniform(-1, 1);
    std::vector<std::vector<double>> u(k + 1, std::vector<double>(dim));
    for (auto& row : u) {
      for (auto& x : row) x = rng.uniform(-1, 1);
    }
    std::vector<std::span<const double>> views(u.begin(), u.end());
    const auto g = sgns_loss_and_gradients(v, views);
    CHECK(g.loss == doctest::Approx(objective(v, u)).epsilon(1e-12));

    const double h = testing::kFdStep;
    for (std::size_t i = 0; i < dim; ++i) {
      auto vp = v, vm = v;
      vp[i] += h;
      vm[i] -= h;
      worst = std::max(worst, testing::relative_error(g.center[i], (objective(vp, u) - objective(vm, u)) / (2 * h)));
    }
    for (std::size_t j = 0; j <= k; ++j) {
      for (std::size_t i = 0; i < dim; ++i) {
        auto up = u, um = u;
        up[j][i] += h;
        um[j][i] -= h;
        worst = std::max(worst, testing::relative_error(g.outputs[j][i], (objective(v, up) - objective(v, um)) / (2 * h)));
      }
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("train_skipgram: planted co-occurrence") {
  SkipGramConfig cfg;
  cfg.window = 1;
  cfg.seed = 3;
  const auto model = train_skipgram(repeated({"alpha", "beta"}, 1000), cfg);
  CHECK(model.dim() == 100);
  CHECK(model.vectors().size() == 2 * 100);
  CHECK(nearest_neighbors(model, "alpha", 1).front().token == "beta");
}

TEST_CASE("train_skipgram: words sharing contexts end up close") {
  // Input vectors capture shared contexts: alpha and beta both appear next to
  // "red", gamma and delta next to "blue".
  SkipGramConfig cfg;
  cfg.window = 1;
  cfg.dim = 20;
  std::vector<TokenSequence> corpus;
  for (const auto& s : {std::vector<std::string>{"alpha", "red"}, {"beta", "red"}, {"gamma", "blue"}, {"delta", "blue"}}) {
    const auto block = repeated(s, 300);
    corpus.insert(corpus.end(), block.begin(), block.end());
  }
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    cfg.seed = seed;
    const auto model = train_skipgram(corpus, cfg);
    auto sim = [&](const char* a, const char* b) {
      for (const auto& n : nearest_neighbors(model, a, 10)) {
        if (n.token == b) return n.similarity;
      }
      return -2.0;
    };
    CHECK(sim("alpha", "beta") > sim("alpha", "gamma"));
    CHECK(sim("alpha", "beta") > sim("alpha", "delta"));
    CHECK(sim("gamma", "delta") > sim("gamma", "beta"));
  }
}

TEST_CASE("train_skipgram: determinism, finiteness, errors") {
  SkipGramConfig cfg;
  cfg.dim = 16;
  cfg.seed = 11;
  const std::vector<TokenSequence> corpus = {{"1", {"heap", "overflow", "in", "parser"}},
                                             {"2", {"parser", "crash", "on", "long", "input"}},
                                             {"3", {"heap", "corruption", "crash"}}};
  const auto a = train_skipgram(corpus, cfg);
  const auto b = train_skipgram(corpus, cfg);
  CHECK(a.same_table(b));
  for (double x : a.vectors()) CHECK(std::isfinite(x));
  cfg.seed = 12;
  CHECK_FALSE(train_skipgram(corpus, cfg).same_table(a));
  CHECK_THROWS_AS(train_skipgram({}, cfg), Error);
  cfg.dim = 0;
  CHECK_THROWS_AS(train_skipgram(corpus, cfg), Error);
}

TEST_CASE("nearest_neighbors") {
  // a and c identical, b orthogonal to a.
  const auto model = planted({"a", "b", "c"}, 2, {1, 0, 0, 1, 1, 0});
  const auto nn = nearest_neighbors(model, "a", 5);
  REQUIRE(nn.size() == 2);
  CHECK(nn[0].token == "c");
  CHECK(nn[0].similarity == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(nn[1].token == "b");
  CHECK(std::abs(nn[1].similarity) < 1e-9);
  CHECK_THROWS_WITH_AS(nearest_neighbors(model, "zzz", 1), doctest::Contains("zzz"), Error);
  // Ties go to the lower vocabulary index.
  const auto tied = planted({"q", "x", "y"}, 2, {1, 0, 0, 1, 0, 1});
  CHECK(nearest_neighbors(tied, "q", 2)[0].token == "x");
}

TEST_CASE("vectorize_document") {
  std::vector<double> vecs;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 3; ++j) vecs.push_back(i * 10 + j);
  }
  const auto model = planted({"t0", "t1", "t2", "t3", "t4", "t5", "t6", "t7"}, 3, vecs);

  const auto m = vectorize_document(model, {"d", {"t2", "oov", "t0", "t1"}}, 5);
  CHECK(m.rows.shape() == Shape{5, 3});
  CHECK(m.valid_rows == 3);
  CHECK(m.rows.at(0, 0) == 20);
  CHECK(m.rows.at(1, 2) == 2);
  for (std::size_t r = 3; r < 5; ++r) {
    for (std::size_t c = 0; c < 3; ++c) CHECK(m.rows.at(r, c) == 0.0);
  }
  const auto without_oov = vectorize_document(model, {"d", {"t2", "t0", "t1"}}, 5);
  CHECK(without_oov.rows == m.rows);

  const auto truncated = vectorize_document(model, {"d", {"t0", "t1", "t2", "t3", "t4", "t5", "t6"}}, 5);
  CHECK(truncated.valid_rows == 5);
  CHECK(truncated.rows.at(4, 0) == 40);

  const auto empty = vectorize_document(model, {"d", {"nothing", "known"}}, 4);
  CHECK(empty.valid_rows == 0);
  CHECK(empty.empty_warning);
  for (double x : empty.rows.values()) CHECK(x == 0.0);
}

TEST_CASE("embedding text format") {
  const auto dir = std::filesystem::temp_directory_path() / "srn_embedding_test";
  std::filesystem::create_directories(dir);
  const auto model = planted({"one", "two", "three"}, 4, {0.1, -2.5e-17, 3, 1.0 / 3, 5, 6, 7, 8, 9, 10, 11, 1e300});
  save_embeddings(model, dir / "e.txt");
  const auto back = load_embeddings(dir / "e.txt");
  CHECK(back.same_table(model));

  CHECK_THROWS_AS(parse_embeddings(""), Error);
  CHECK_THROWS_WITH_AS(parse_embeddings("1 3\nword 1 2\n"), doctest::Contains("line 2"), Error);
  CHECK_THROWS_AS(parse_embeddings("2 2\nword 1 2\n"), Error);
  CHECK_THROWS_AS(parse_embeddings("x y\n"), Error);

  std::string wide = "1 100\nw";
  for (int i = 0; i < 99; ++i) wide += " 0.5";
  CHECK_THROWS_WITH_AS(parse_embeddings(wide + "\n"), doctest::Contains("line 2"), Error);
  std::filesystem::remove_all(dir);
}

TEST_CASE("text round-trip preserves neighbor rankings") {
  SkipGramConfig cfg;
  cfg.dim = 12;
  cfg.seed = 5;
  const std::vector<TokenSequence> corpus = {{"1", {"a", "b", "c", "d", "e"}}, {"2", {"c", "d", "f", "g"}},
                                             {"3", {"g", "a", "e", "b"}}};
  const auto model = train_skipgram(corpus, cfg);
  const auto back = parse_embeddings(embeddings_to_text(model));
  for (const auto& tok : model.vocabulary().tokens()) {
    const auto x = nearest_neighbors(model, tok, 10);
    const auto y = nearest_neighbors(back, tok, 10);
    REQUIRE(x.size() == y.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(x[i].token == y[i].token);
      CHECK(x[i].similarity == y[i].similarity);
    }
  }
}
