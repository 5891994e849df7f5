#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "securereqnet/architectures.hpp"
#include "securereqnet/neural.hpp"

namespace srn {

/// Vectorized labeled samples (labels: 1 = SR, 0 = non-SR).
struct Dataset {
  std::vector<Tensor> inputs;
  std::vector<int> labels;

  std::size_t size() const { return inputs.size(); }
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_acc = 0.0;
  double val_loss = 0.0;
  double val_acc = 0.0;

  bool operator==(const EpochRecord&) const = default;
};

struct TrainingHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  std::size_t stopped_epoch = 0;

  bool operator==(const TrainingHistory&) const = default;
};

nlohmann::ordered_json history_to_json(const TrainingHistory& history);
TrainingHistory history_from_json(const nlohmann::json& j);
/// "epoch,train_loss,train_acc,val_loss,val_acc" rows.
std::string history_to_csv(const TrainingHistory& history);

struct TrainingConfig {
  std::size_t max_epochs = 2000;
  std::size_t patience = 100;
  std::size_t batch_size = 32;
  double min_delta = 0.0;
  OptimizerConfig optimizer;
  double dropout_rate = 0.2;  // applied when the architecture is built
  std::size_t max_len = 200;  // applied when documents are vectorized
  std::uint64_t seed = 0;
  /// When set, best.ckpt is rewritten on every improvement and final.ckpt
  /// plus history.csv are written at the end.
  std::filesystem::path checkpoint_dir;
  /// Called after each epoch's validation pass, before the early-stopping
  /// decision. The record may be adjusted (e.g. to monitor a custom loss).
  std::function<void(EpochRecord&, Network&)> on_epoch_end;
};

/// Patience-based early stopping on validation loss.
class EarlyStopping {
 public:
  enum class Decision { Continue, Stop };

  explicit EarlyStopping(std::size_t patience, double min_delta = 0.0);

  /// Improvement means val_loss < best - min_delta.
  Decision update(std::size_t epoch, double val_loss);

  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }
  std::size_t stalled() const { return stalled_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_loss_ = std::numeric_limits<double>::infinity();
  std::size_t best_epoch_ = 0;
  std::size_t stalled_ = 0;
  bool improved_ = false;
};

struct TrainingResult {
  Network best;
  Network final;
  TrainingHistory history;
};

/// Mini-batch training with validation-loss early stopping. Deterministic for
/// a fixed config seed.
TrainingResult train(const Network& initial, const ArchitectureSpec& spec, const Dataset& train_set,
                     const Dataset& val_set, const TrainingConfig& config);

/// Mean BCE and accuracy (threshold 0.5) in inference mode.
std::pair<double, double> loss_and_accuracy(Network& net, const Dataset& data);

struct Checkpoint {
  ArchitectureSpec spec;
  Network network;
  TrainingHistory history;
};

inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const Network& net, const ArchitectureSpec& spec, const TrainingHistory& history);
Checkpoint deserialize_checkpoint(std::string_view bytes);
void save_checkpoint(const Network& net, const ArchitectureSpec& spec, const TrainingHistory& history,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace srn
