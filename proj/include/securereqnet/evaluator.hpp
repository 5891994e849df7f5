#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "securereqnet/neural.hpp"

namespace srn {

/// SR is the positive class.
struct ConfusionMatrix {
  std::uint64_t tp = 0;
  std::uint64_t tn = 0;
  std::uint64_t fp = 0;
  std::uint64_t fn = 0;

  std::uint64_t total() const { return tp + tn + fp + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  bool operator==(const RocPoint&) const = default;
};

struct EvaluationReport {
  double loss = 0.0;  // mean binary cross-entropy
  double accuracy = 0.0;
  ConfusionMatrix confusion;
  std::vector<RocPoint> roc;
  std::optional<double> auc;  // absent when only one class is present
  std::size_t n_samples = 0;
  double threshold = 0.5;
  std::string source;  // set for per-source reports
  std::vector<std::string> warnings;

  bool operator==(const EvaluationReport&) const = default;
};

/// SR probability from the softmax head, inference mode.
double predict(Network& net, const Tensor& document_matrix);

/// Predicted SR iff score >= threshold. Labels are 1 for SR, 0 otherwise.
ConfusionMatrix confusion(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);

/// (TP + TN) / (TP + TN + FP + FN).
double accuracy(const ConfusionMatrix& cm);

/// Thresholds swept over the distinct scores in descending order, starting
/// at (0, 0) and ending at (1, 1).
std::vector<RocPoint> roc_curve(std::span<const double> scores, std::span<const int> labels);

/// Trapezoidal area under a ROC point sequence.
double trapezoid_area(std::span<const RocPoint> roc);

/// Probability that a random positive outscores a random negative, ties
/// counting one half (computed from mid-ranks).
double auc(std::span<const double> scores, std::span<const int> labels);

EvaluationReport evaluate_scores(std::span<const double> scores, std::span<const int> labels, double threshold = 0.5);
EvaluationReport evaluate(Network& net, std::span<const Tensor* const> inputs, std::span<const int> labels,
                          double threshold = 0.5);

nlohmann::ordered_json report_to_json(const EvaluationReport& report);
EvaluationReport report_from_json(const nlohmann::json& j);
std::string roc_to_csv(std::span<const RocPoint> roc);

}  // namespace srn
