#include "securereqnet/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "securereqnet/error.hpp"

namespace srn {
namespace {

void check_lengths(std::span<const double> scores, std::span<const int> labels, std::string_view who) {
  if (scores.size() != labels.size()) {
    fail(ErrorKind::Shape, std::string(who) + ": " + std::to_string(scores.size()) + " scores but " +
                               std::to_string(labels.size()) + " labels");
  }
}

std::pair<std::size_t, std::size_t> class_counts(std::span<const int> labels) {
  const auto pos = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
  return {pos, labels.size() - pos};
}

void require_both_classes(std::span<const int> labels, std::string_view who) {
  const auto [pos, neg] = class_counts(labels);
  if (pos == 0 || neg == 0) fail(ErrorKind::Data, std::string(who) + ": both classes must be present");
}

// Neumaier-compensated sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    comp_ += std::abs(sum_) >= std::abs(x) ? (sum_ - t) + x : (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace

double predict(Network& net, const Tensor& document_matrix) { return net.predict(document_matrix)[kSrIndex]; }

ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores, labels, "confusion");
  ConfusionMatrix cm;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const bool predicted_sr = scores[i] >= threshold;
    const bool actual_sr = labels[i] == 1;
    if (predicted_sr && actual_sr) ++cm.tp;
    else if (predicted_sr) ++cm.fp;
    else if (actual_sr) ++cm.fn;
    else ++cm.tn;
  }
  return cm;
}

double accuracy(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail(ErrorKind::Data, "accuracy: empty confusion matrix");
  return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.tp + cm.tn + cm.fp + cm.fn);
}

std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "roc_curve");
  require_both_classes(labels, "roc_curve");
  const auto [pos, neg] = class_counts(labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<RocPoint> roc{{0.0, 0.0}};
  std::size_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double s = scores[order[i]];
    while (i < order.size() && scores[order[i]] == s) {
      (labels[order[i]] == 1 ? tp : fp) += 1;
      ++i;
    }
    roc.push_back({static_cast<double>(fp) / static_cast<double>(neg), static_cast<double>(tp) / static_cast<double>(pos)});
  }
  if (roc.back() != RocPoint{1.0, 1.0}) roc.push_back({1.0, 1.0});
  return roc;
}

double trapezoid_area(std::span<const RocPoint> roc) {
  double area = 0.0;
  for (std::size_t i = 1; i < roc.size(); ++i) {
    area += (roc[i].fpr - roc[i - 1].fpr) * (roc[i].tpr + roc[i - 1].tpr) * 0.5;
  }
  return area;
}

double auc(std::span<const double> scores, std::span<const int> labels) {
  check_lengths(scores, labels, "auc");
  require_both_classes(labels, "auc");
  const auto [pos, neg] = class_counts(labels);
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of 1-based mid-ranks of the positives.
  double rank_sum = 0.0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    std::size_t positives = 0;
    while (j < order.size() && scores[order[j]] == scores[order[i]]) {
      positives += labels[order[j]] == 1 ? 1 : 0;
      ++j;
    }
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    rank_sum += mid_rank * static_cast<double>(positives);
    i = j;
  }
  const double p = static_cast<double>(pos);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * static_cast<double>(neg));
}

EvaluationReport evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold) {
  check_lengths(scores, labels, "evaluate");
  if (scores.empty()) fail(ErrorKind::Data, "evaluate: empty test set");
  EvaluationReport report;
  report.n_samples = scores.size();
  report.threshold = threshold;
  CompensatedSum loss;
  for (std::size_t i = 0; i < scores.size(); ++i) loss.add(bce_loss(scores[i], labels[i]));
  report.loss = loss.value() / static_cast<double>(scores.size());
  report.confusion = confusion(scores, labels, threshold);
  report.accuracy = accuracy(report.confusion);
  const auto [pos, neg] = class_counts(labels);
  if (pos > 0 && neg > 0) {
    report.roc = roc_curve(scores, labels);
    report.auc = auc(scores, labels);
  } else {
    report.warnings.push_back("single-class set: ROC and AUC omitted");
  }
  return report;
}

EvaluationReport evaluate(Network& net, std::span<const Tensor* const> inputs, std::span<const int> labels,
                          double threshold) {
  if (inputs.size() != labels.size()) fail(ErrorKind::Shape, "evaluate: inputs and labels differ in length");
  std::vector<double> scores;
  scores.reserve(inputs.size());
  for (const Tensor* x : inputs) scores.push_back(predict(net, *x));
  return evaluate_scores(scores, labels, threshold);
}

nlohmann::ordered_json report_to_json(const EvaluationReport& r) {
  nlohmann::ordered_json j;
  if (!r.source.empty()) j["source"] = r.source;
  j["loss"] = r.loss;
  j["loss_reduction"] = "mean";
  j["accuracy"] = r.accuracy;
  j["auc"] = r.auc ? nlohmann::ordered_json(*r.auc) : nlohmann::ordered_json(nullptr);
  j["threshold"] = r.threshold;
  j["n_samples"] = r.n_samples;
  j["confusion"] = {{"tp", r.confusion.tp}, {"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn}};
  j["roc"] = nlohmann::ordered_json::array();
  for (const auto& p : r.roc) j["roc"].push_back({p.fpr, p.tpr});
  if (!r.warnings.empty()) j["warnings"] = r.warnings;
  return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
  try {
    EvaluationReport r;
    r.source = j.value("source", "");
    r.loss = j.at("loss").get<double>();
    r.accuracy = j.at("accuracy").get<double>();
    if (!j.at("auc").is_null()) r.auc = j.at("auc").get<double>();
    r.threshold = j.at("threshold").get<double>();
    r.n_samples = j.at("n_samples").get<std::size_t>();
    const auto& c = j.at("confusion");
    r.confusion = {c.at("tp").get<std::uint64_t>(), c.at("tn").get<std::uint64_t>(), c.at("fp").get<std::uint64_t>(),
                   c.at("fn").get<std::uint64_t>()};
    for (const auto& p : j.at("roc")) r.roc.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    if (j.contains("warnings")) r.warnings = j["warnings"].get<std::vector<std::string>>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("evaluation report: ") + e.what());
  }
}

std::string roc_to_csv(std::span<const RocPoint> roc) {
  std::string out = "fpr,tpr\n";
  for (const auto& p : roc) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", p.fpr, p.tpr);
    out += buf;
  }
  return out;
}

}  // namespace srn
