#include <doctest.h>

#include <cmath>

#include "securereqnet/error.hpp"
#include "securereqnet/evaluator.hpp"
#include "securereqnet/random.hpp"

using namespace srn;

namespace {

// Fraction of (positive, negative) pairs ordered correctly, ties counting one half.
double pairwise_auc(const std::vector<double>& s, const std::vector<int>& y) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (y[i] != 1) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (y[j] != 0) continue;
      ++pairs;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / static_cast<double>(pairs);
}

struct Scored {
  std::vector<double> scores;
  std::vector<int> labels;
};

// Scores on a coarse grid so ties are common; both classes always present.
Scored random_scored(Rng& rng, std::size_t n) {
  Scored out;
  const auto grid = 2 + rng.below(20);
  for (std::size_t i = 0; i < n; ++i) {
    out.scores.push_back(static_cast<double>(rng.below(grid)) / static_cast<double>(grid - 1));
    out.labels.push_back(i < 2 ? static_cast<int>(i) : static_cast<int>(rng.below(2)));
  }
  return out;
}

// Input [2] -> logits scale * x -> softmax.
Network linear_head(double scale) {
  LayerStack layers;
  auto dense = std::make_unique<Dense>(2, 2);
  dense->weights().value = Tensor({2, 2}, {scale, 0.0, 0.0, scale});
  dense->bias().value.fill(0.0);
  layers.push_back(std::move(dense));
  layers.push_back(std::make_unique<Softmax>());
  return Network({2}, std::move(layers));
}

Tensor onehot(int label) {
  Tensor x({2});
  x[static_cast<std::size_t>(label)] = 1.0;
  return x;
}

}  // namespace

TEST_CASE("predict") {
  auto zero = linear_head(0.0);
  CHECK(predict(zero, onehot(1)) == 0.5);
  auto net = linear_head(3.0);
  const Tensor x({2}, {0.3, -1.2});
  CHECK(predict(net, x) == predict(net, x));
  const auto p = net.predict(x);
  CHECK(std::abs(p[0] + p[1] - 1.0) <= 1e-9);
  CHECK_THROWS_AS(predict(net, Tensor({3})), Error);
}

TEST_CASE("confusion examples") {
  const std::vector<double> s1 = {0.9, 0.1};
  const std::vector<int> y1 = {1, 0};
  CHECK(confusion(s1, y1) == ConfusionMatrix{1, 1, 0, 0});

  const std::vector<double> tie = {0.5};
  const std::vector<int> neg = {0};
  CHECK(confusion(tie, neg).fp == 1);

  const std::vector<double> ones(10, 1.0);
  const std::vector<int> balanced = {1, 0, 1, 0, 1, 0, 1, 0, 1, 0};
  const auto cm = confusion(ones, balanced);
  CHECK(cm.tp == 5);
  CHECK(cm.fp == 5);
  CHECK(cm.tn + cm.fn == 0);

  const std::vector<double> three = {0.1, 0.2, 0.3};
  CHECK_THROWS_AS(confusion(three, y1), Error);
}

TEST_CASE("accuracy examples") {
  CHECK(accuracy({48, 48, 2, 2}) == 0.96);
  CHECK(accuracy({3, 7, 0, 0}) == 1.0);
  CHECK(accuracy({0, 0, 5, 5}) == 0.0);
  CHECK_THROWS_AS(accuracy({}), Error);
}

TEST_CASE("accuracy property") {
  Rng rng(4);
  for (int trial = 0; trial < 200; ++trial) {
    const auto d = random_scored(rng, 1 + rng.below(60));
    const auto cm = confusion(d.scores, d.labels, rng.uniform());
    const double acc = accuracy(cm);
    CHECK(acc >= 0.0);
    CHECK(acc <= 1.0);
    CHECK(acc == doctest::Approx(1.0 - static_cast<double>(cm.fp + cm.fn) / static_cast<double>(d.scores.size()))
                     .epsilon(1e-15));
  }
}

TEST_CASE("roc examples") {
  const std::vector<double> s = {0.9, 0.4, 0.5, 0.1};
  const std::vector<int> y = {1, 1, 0, 0};
  const std::vector<RocPoint> expected = {{0, 0}, {0, 0.5}, {0.5, 0.5}, {0.5, 1}, {1, 1}};
  CHECK(roc_curve(s, y) == expected);
  CHECK(auc(s, y) == 0.75);
  CHECK(trapezoid_area(roc_curve(s, y)) == 0.75);

  const std::vector<double> flat = {0.3, 0.3, 0.3, 0.3};
  const std::vector<RocPoint> corners = {{0, 0}, {1, 1}};
  CHECK(roc_curve(flat, y) == corners);
  CHECK(auc(flat, y) == 0.5);

  const std::vector<double> separated = {0.8, 0.7, 0.2, 0.1};
  const auto roc = roc_curve(separated, y);
  CHECK(std::find(roc.begin(), roc.end(), RocPoint{0, 1}) != roc.end());
  CHECK(auc(separated, y) == 1.0);

  const std::vector<int> single = {1, 1, 1, 1};
  CHECK_THROWS_AS(roc_curve(s, single), Error);
  CHECK_THROWS_AS(auc(s, single), Error);
}

TEST_CASE("auc properties") {
  Rng rng(17);
  for (int trial = 0; trial < 500; ++trial) {
    const auto d = random_scored(rng, 2 + rng.below(199));
    const double oracle = pairwise_auc(d.scores, d.labels);
    const auto roc = roc_curve(d.scores, d.labels);
    CHECK(std::abs(trapezoid_area(roc) - oracle) <= 1e-9);
    CHECK(std::abs(auc(d.scores, d.labels) - oracle) <= 1e-9);
    CHECK(roc.front() == RocPoint{0, 0});
    CHECK(roc.back() == RocPoint{1, 1});
    for (std::size_t i = 1; i < roc.size(); ++i) {
      CHECK(roc[i].fpr >= roc[i - 1].fpr);
      CHECK(roc[i].tpr >= roc[i - 1].tpr);
    }

    std::vector<double> transformed, flipped;
    std::vector<int> relabeled;
    for (std::size_t i = 0; i < d.scores.size(); ++i) {
      transformed.push_back(std::exp(3.0 * d.scores[i]) - 7.0);
      flipped.push_back(1.0 - d.scores[i]);
      relabeled.push_back(1 - d.labels[i]);
    }
    CHECK(std::abs(auc(transformed, d.labels) - oracle) <= 1e-12);
    CHECK(std::abs(auc(flipped, relabeled) - oracle) <= 1e-12);
  }
}

TEST_CASE("evaluate with closed-form classifiers") {
  std::vector<Tensor> xs;
  std::vector<int> ys;
  for (int i = 0; i < 20; ++i) {
    ys.push_back(i % 2);
    xs.push_back(onehot(i % 2));
  }
  std::vector<const Tensor*> ptrs;
  for (const auto& x : xs) ptrs.push_back(&x);

  auto oracle = linear_head(40.0);
  const auto good = evaluate(oracle, ptrs, ys);
  CHECK(good.accuracy == 1.0);
  REQUIRE(good.auc.has_value());
  CHECK(*good.auc == 1.0);
  CHECK(good.loss < 1e-6);
  CHECK(good.n_samples == 20);

  auto constant = linear_head(0.0);
  const auto chance = evaluate(constant, ptrs, ys);
  CHECK(chance.accuracy == 0.5);
  CHECK(chance.confusion == ConfusionMatrix{10, 0, 10, 0});
  CHECK(*chance.auc == 0.5);
  CHECK(chance.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  CHECK(report_from_json(nlohmann::json::parse(report_to_json(good).dump())) == good);
  CHECK(report_from_json(nlohmann::json::parse(report_to_json(chance).dump())) == chance);

  const std::vector<int> only_sr(20, 1);
  const auto single = evaluate(oracle, ptrs, only_sr);
  CHECK_FALSE(single.auc.has_value());
  CHECK(single.roc.empty());
  CHECK(single.warnings.size() == 1);
  CHECK(report_from_json(report_to_json(single)) == single);

  CHECK_THROWS_AS(evaluate(oracle, std::span<const Tensor* const>{}, std::span<const int>{}), Error);
}

TEST_CASE("roc csv") {
  const std::vector<RocPoint> roc = {{0, 0}, {0.5, 1}, {1, 1}};
  CHECK(roc_to_csv(roc) == "fpr,tpr\n0,0\n0.5,1\n1,1\n");
}
