#include "securereqnet/trainer.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"

namespace srn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

constexpr char kMagic[8] = {'S', 'R', 'N', 'C', 'K', 'P', 'T', '\0'};

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) fail(ErrorKind::Format, "checkpoint: truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::ordered_json history_to_json(const TrainingHistory& h) {
  nlohmann::ordered_json j;
  j["best_epoch"] = h.best_epoch;
  j["stopped_epoch"] = h.stopped_epoch;
  j["epochs"] = nlohmann::ordered_json::array();
  for (const auto& e : h.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch},
                           {"train_loss", e.train_loss},
                           {"train_acc", e.train_acc},
                           {"val_loss", e.val_loss},
                           {"val_acc", e.val_acc}});
  }
  return j;
}

TrainingHistory history_from_json(const nlohmann::json& j) {
  try {
    TrainingHistory h;
    h.best_epoch = j.at("best_epoch").get<std::size_t>();
    h.stopped_epoch = j.at("stopped_epoch").get<std::size_t>();
    for (const auto& e : j.at("epochs")) {
      h.epochs.push_back({e.at("epoch").get<std::size_t>(), e.at("train_loss").get<double>(),
                          e.at("train_acc").get<double>(), e.at("val_loss").get<double>(), e.at("val_acc").get<double>()});
    }
    return h;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("training history: ") + e.what());
  }
}

std::string history_to_csv(const TrainingHistory& h) {
  std::string out = "epoch,train_loss,train_acc,val_loss,val_acc\n";
  for (const auto& e : h.epochs) {
    out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.train_acc) + "," +
           format_double(e.val_loss) + "," + format_double(e.val_acc) + "\n";
  }
  return out;
}

EarlyStopping::EarlyStopping(std::size_t patience, double min_delta) : patience_(patience), min_delta_(min_delta) {
  if (patience == 0) fail(ErrorKind::Usage, "early stopping: patience must be >= 1");
  if (min_delta < 0) fail(ErrorKind::Usage, "early stopping: min_delta must be >= 0");
}

EarlyStopping::Decision EarlyStopping::update(std::size_t epoch, double val_loss) {
  if (!std::isfinite(val_loss)) fail(ErrorKind::Numeric, "early stopping: non-finite validation loss at epoch " + std::to_string(epoch));
  improved_ = val_loss < best_loss_ - min_delta_;
  if (improved_) {
    best_loss_ = val_loss;
    best_epoch_ = epoch;
    stalled_ = 0;
    return Decision::Continue;
  }
  ++stalled_;
  return stalled_ >= patience_ ? Decision::Stop : Decision::Continue;
}

std::pair<double, double> loss_and_accuracy(Network& net, const Dataset& data) {
  if (data.size() == 0) fail(ErrorKind::Data, "empty dataset");
  double loss = 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double p = net.predict(data.inputs[i])[kSrIndex];
    loss += bce_loss(p, data.labels[i]);
    if ((p >= 0.5) == (data.labels[i] == 1)) ++correct;
  }
  const auto n = static_cast<double>(data.size());
  return {loss / n, static_cast<double>(correct) / n};
}

TrainingResult train(const Network& initial, const ArchitectureSpec& spec, const Dataset& train_set,
                     const Dataset& val_set, const TrainingConfig& config) {
  if (config.max_epochs < 1 || config.batch_size < 1) fail(ErrorKind::Usage, "train: max_epochs and batch_size must be >= 1");
  if (train_set.size() == 0 || val_set.size() == 0) fail(ErrorKind::Data, "train: training and validation sets must be non-empty");
  if (train_set.labels.size() != train_set.size() || val_set.labels.size() != val_set.size()) {
    fail(ErrorKind::Data, "train: inputs and labels differ in length");
  }
  for (const auto* set : {&train_set, &val_set}) {
    for (const auto& x : set->inputs) {
      if (x.shape() != initial.input_shape()) {
        fail(ErrorKind::Shape, "train: sample shape " + shape_to_string(x.shape()) + " does not match network input " +
                                   shape_to_string(initial.input_shape()));
      }
    }
  }

  Network net = initial;
  Optimizer optimizer(config.optimizer);
  EarlyStopping stopper(config.patience, config.min_delta);
  Rng shuffle_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<Tensor> best_weights = net.weights();
  TrainingHistory history;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Tensor*> batch;
  std::vector<int> labels;
  const auto params = net.parameters();

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        batch.push_back(&train_set.inputs[order[i]]);
        labels.push_back(train_set.labels[order[i]]);
      }
      const auto step = compute_gradients(net, batch, labels, Mode::Train, dropout_rng);
      if (!std::isfinite(step.loss)) {
        fail(ErrorKind::Numeric, "train: non-finite loss at epoch " + std::to_string(epoch) +
                                     (config.checkpoint_dir.empty() ? "" : "; last good weights in best.ckpt"));
      }
      optimizer.step(params);
      loss_sum += step.loss * static_cast<double>(batch.size());
      correct += step.correct;
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = loss_sum / static_cast<double>(train_set.size());
    record.train_acc = static_cast<double>(correct) / static_cast<double>(train_set.size());
    std::tie(record.val_loss, record.val_acc) = loss_and_accuracy(net, val_set);
    if (config.on_epoch_end) config.on_epoch_end(record, net);
    history.epochs.push_back(record);

    const auto decision = stopper.update(epoch, record.val_loss);
    history.stopped_epoch = epoch;
    if (stopper.improved()) {
      best_weights = net.weights();
      history.best_epoch = epoch;
      if (!config.checkpoint_dir.empty()) {
        Network best = net;
        save_checkpoint(best, spec, history, config.checkpoint_dir / "best.ckpt");
      }
    }
    if (decision == EarlyStopping::Decision::Stop) break;
  }

  Network best = net;
  best.set_weights(best_weights);
  if (!config.checkpoint_dir.empty()) {
    save_checkpoint(best, spec, history, config.checkpoint_dir / "best.ckpt");
    save_checkpoint(net, spec, history, config.checkpoint_dir / "final.ckpt");
    write_file_atomic(config.checkpoint_dir / "history.csv", history_to_csv(history));
  }
  return {std::move(best), std::move(net), std::move(history)};
}

std::string serialize_checkpoint(const Network& net, const ArchitectureSpec& spec, const TrainingHistory& history) {
  nlohmann::ordered_json header;
  header["format_version"] = kCheckpointVersion;
  header["spec"] = spec_to_json(spec);
  header["history"] = history_to_json(history);
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, header_text.size());
  out += header_text;
  const auto weights = net.weights();
  put<std::uint64_t>(out, weights.size());
  for (const auto& w : weights) {
    put<std::uint64_t>(out, w.size());
    out.append(reinterpret_cast<const char*>(w.data()), w.size() * sizeof(double));
  }
  put<std::uint32_t>(out, crc32_of(out));
  return out;
}

Checkpoint deserialize_checkpoint(std::string_view bytes) {
  if (bytes.size() < sizeof kMagic + 4 || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    fail(ErrorKind::Format, "checkpoint: not a checkpoint file");
  }
  Reader header_reader(bytes.substr(sizeof kMagic));
  const auto version = header_reader.get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    fail(ErrorKind::Format, "checkpoint: unsupported format version " + std::to_string(version) + " (expected " +
                                std::to_string(kCheckpointVersion) + ")");
  }
  if (bytes.size() < sizeof kMagic + 4 + 4) fail(ErrorKind::Format, "checkpoint: truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 4);
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, bytes.data() + body.size(), 4);
  if (crc32_of(body) != stored_crc) fail(ErrorKind::Format, "checkpoint: checksum mismatch (truncated or corrupted)");

  Reader r(body.substr(sizeof kMagic + 4));
  const auto header_len = r.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(r.take(header_len));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Format, std::string("checkpoint: bad header: ") + e.what());
  }
  if (!header.contains("spec") || !header.contains("history")) fail(ErrorKind::Format, "checkpoint: header lacks spec/history");

  Checkpoint ckpt{spec_from_json(header["spec"]), Network({}, {}), history_from_json(header["history"])};
  ckpt.network = build_network(ckpt.spec);
  const auto expected = ckpt.network.weights();
  const auto count = r.get<std::uint64_t>();
  if (count != expected.size()) {
    fail(ErrorKind::Shape, "checkpoint: " + std::to_string(count) + " weight arrays, architecture expects " +
                               std::to_string(expected.size()));
  }
  std::vector<Tensor> weights;
  for (std::size_t i = 0; i < count; ++i) {
    const auto n = r.get<std::uint64_t>();
    if (n != expected[i].size()) {
      fail(ErrorKind::Shape, "checkpoint: weight array " + std::to_string(i) + " has " + std::to_string(n) +
                                 " values, architecture expects " + std::to_string(expected[i].size()));
    }
    const auto raw = r.take(n * sizeof(double));
    std::vector<double> values(n);
    std::memcpy(values.data(), raw.data(), raw.size());
    weights.emplace_back(expected[i].shape(), std::move(values));
  }
  if (r.remaining() != 0) fail(ErrorKind::Format, "checkpoint: trailing bytes");
  ckpt.network.set_weights(weights);
  return ckpt;
}

void save_checkpoint(const Network& net, const ArchitectureSpec& spec, const TrainingHistory& history,
                     const std::filesystem::path& path) {
  write_file_atomic(path, serialize_checkpoint(net, spec, history));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_checkpoint(read_file(path));
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Io) throw;
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

}  // namespace srn
