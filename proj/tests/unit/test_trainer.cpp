#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"
#include "securereqnet/trainer.hpp"
#include "synthetic.hpp"

using namespace srn;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kLen = 8;
constexpr std::size_t kDim = 4;

Dataset planted_dataset(std::size_t n, std::uint64_t seed) {
  return testing::planted_spike_dataset(n, kLen, kDim, seed);
}

ArchitectureSpec small_spec(std::uint64_t seed = 3) {
  auto spec = shallow_spec(kLen, kDim, 4);
  spec.seed = seed;
  return spec;
}

TrainingConfig quick_config(std::size_t max_epochs, std::size_t patience) {
  TrainingConfig c;
  c.max_epochs = max_epochs;
  c.patience = patience;
  c.batch_size = 8;
  c.optimizer.learning_rate = 1e-2;
  c.seed = 11;
  return c;
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("srn_trainer_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ErrorKind kind_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("early stopping examples") {
  SUBCASE("improvement at 2 then flat stops at 102") {
    EarlyStopping es(100);
    const double losses[] = {1.0, 0.5};
    CHECK(es.update(1, losses[0]) == EarlyStopping::Decision::Continue);
    CHECK(es.update(2, losses[1]) == EarlyStopping::Decision::Continue);
    std::size_t epoch = 3;
    while (es.update(epoch, 0.6) == EarlyStopping::Decision::Continue) ++epoch;
    CHECK(epoch == 102);
    CHECK(es.best_epoch() == 2);
    CHECK(es.best_loss() == 0.5);
  }
  SUBCASE("patience 3") {
    EarlyStopping es(3);
    CHECK(es.update(1, 1.0) == EarlyStopping::Decision::Continue);
    CHECK(es.update(2, 1.0) == EarlyStopping::Decision::Continue);
    CHECK(es.update(3, 1.1) == EarlyStopping::Decision::Continue);
    CHECK(es.update(4, 1.0) == EarlyStopping::Decision::Stop);
    CHECK(es.best_epoch() == 1);
  }
  SUBCASE("strictly decreasing never stops") {
    EarlyStopping es(1);
    double loss = 10.0;
    for (std::size_t e = 1; e <= 1000; ++e) {
      CHECK(es.update(e, loss) == EarlyStopping::Decision::Continue);
      loss *= 0.99;
    }
    CHECK(es.best_epoch() == 1000);
  }
  SUBCASE("min_delta") {
    EarlyStopping es(2, 0.1);
    es.update(1, 1.0);
    es.update(2, 0.95);
    CHECK_FALSE(es.improved());
    es.update(2, 0.85);
    CHECK(es.improved());
  }
  CHECK_THROWS_AS(EarlyStopping(0), Error);
  EarlyStopping es(5);
  CHECK(kind_of([&] { es.update(1, std::nan("")); }) == ErrorKind::Numeric);
}

TEST_CASE("a network that cannot improve stops after patience with best epoch 1") {
  const auto train_set = planted_dataset(16, 1), val_set = planted_dataset(8, 2);
  const auto spec = small_spec();
  auto config = quick_config(500, 7);
  config.optimizer.learning_rate = 0.0;
  const auto result = train(build_network(spec), spec, train_set, val_set, config);
  CHECK(result.history.best_epoch == 1);
  CHECK(result.history.stopped_epoch == 8);
  CHECK(result.history.epochs.size() == 8);
  CHECK(result.best.weights() == build_network(spec).weights());
}

TEST_CASE("training learns a planted signal") {
  const auto train_set = planted_dataset(64, 1), val_set = planted_dataset(32, 2);
  const auto spec = small_spec();
  const auto result = train(build_network(spec), spec, train_set, val_set, quick_config(60, 60));
  const auto& h = result.history;
  REQUIRE(h.epochs.size() == 60);
  CHECK(h.epochs.back().train_loss < 0.5 * h.epochs.front().train_loss);
  auto best = result.best;
  const auto [loss, acc] = loss_and_accuracy(best, val_set);
  CHECK(acc >= 0.9);
  CHECK(loss == doctest::Approx(h.epochs[h.best_epoch - 1].val_loss).epsilon(1e-12));
}

TEST_CASE("history invariants and determinism") {
  const auto train_set = planted_dataset(24, 5), val_set = planted_dataset(12, 6);
  const auto spec = small_spec();
  const auto config = quick_config(30, 4);
  const auto a = train(build_network(spec), spec, train_set, val_set, config);
  const auto b = train(build_network(spec), spec, train_set, val_set, config);
  CHECK(a.history == b.history);
  CHECK(a.best.weights() == b.best.weights());
  CHECK(a.final.weights() == b.final.weights());

  const auto& h = a.history;
  REQUIRE(!h.epochs.empty());
  CHECK(h.stopped_epoch == h.epochs.size());
  CHECK(h.best_epoch >= 1);
  CHECK(h.best_epoch <= h.stopped_epoch);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < h.epochs.size(); ++i) {
    CHECK(h.epochs[i].epoch == i + 1);
    CHECK(std::isfinite(h.epochs[i].train_loss));
    CHECK(h.epochs[i].val_acc >= 0.0);
    CHECK(h.epochs[i].val_acc <= 1.0);
    best = std::min(best, h.epochs[i].val_loss);
  }
  CHECK(h.epochs[h.best_epoch - 1].val_loss == best);
  CHECK(h.epochs[h.best_epoch - 1].val_loss <= h.epochs.back().val_loss);
  if (h.stopped_epoch < config.max_epochs) CHECK(h.stopped_epoch - h.best_epoch == config.patience);

  auto other = config;
  other.seed = 12;
  CHECK_FALSE(train(build_network(spec), spec, train_set, val_set, other).final.weights() == a.final.weights());
}

TEST_CASE("best weights are the snapshot of the best epoch") {
  const auto train_set = planted_dataset(16, 7), val_set = planted_dataset(8, 8);
  const auto spec = small_spec();
  auto config = quick_config(100, 10);
  constexpr std::size_t k = 6;
  std::vector<Tensor> snapshot;
  config.on_epoch_end = [&](EpochRecord& rec, Network& net) {
    // Loss falls until epoch k and rises afterwards.
    rec.val_loss = rec.epoch <= k ? 1.0 / static_cast<double>(rec.epoch) : 1.0 + static_cast<double>(rec.epoch);
    if (rec.epoch == k) snapshot = net.weights();
  };
  const auto result = train(build_network(spec), spec, train_set, val_set, config);
  CHECK(result.history.best_epoch == k);
  CHECK(result.history.stopped_epoch == k + 10);
  CHECK(result.best.weights() == snapshot);
  CHECK_FALSE(result.final.weights() == snapshot);
}

TEST_CASE("input validation") {
  const auto spec = small_spec();
  const auto net = build_network(spec);
  auto good = planted_dataset(4, 1);
  auto config = quick_config(2, 2);
  CHECK(kind_of([&] { train(net, spec, Dataset{}, good, config); }) == ErrorKind::Data);
  auto bad = good;
  bad.inputs[0] = Tensor({kLen + 1, kDim});
  CHECK(kind_of([&] { train(net, spec, bad, good, config); }) == ErrorKind::Shape);
  config.batch_size = 0;
  CHECK(kind_of([&] { train(net, spec, good, good, config); }) == ErrorKind::Usage);
}

TEST_CASE("non-finite loss aborts with a numeric error") {
  const auto spec = small_spec();
  auto train_set = planted_dataset(8, 1);
  train_set.inputs[3][0] = std::numeric_limits<double>::quiet_NaN();
  CHECK(kind_of([&] { train(build_network(spec), spec, train_set, planted_dataset(4, 2), quick_config(3, 3)); }) ==
        ErrorKind::Numeric);
}

TEST_CASE("checkpoint round-trip") {
  const auto train_set = planted_dataset(16, 1), val_set = planted_dataset(8, 2);
  const auto spec = small_spec();
  const auto dir = scratch("roundtrip");
  auto config = quick_config(5, 5);
  config.checkpoint_dir = dir;
  auto result = train(build_network(spec), spec, train_set, val_set, config);
  REQUIRE(fs::exists(dir / "best.ckpt"));
  REQUIRE(fs::exists(dir / "final.ckpt"));
  REQUIRE(fs::exists(dir / "history.csv"));

  auto loaded = load_checkpoint(dir / "final.ckpt");
  CHECK(loaded.spec == spec);
  CHECK(loaded.history == result.history);
  CHECK(loaded.network.weights() == result.final.weights());
  for (const auto& x : val_set.inputs) CHECK(loaded.network.predict(x) == result.final.predict(x));
  CHECK(serialize_checkpoint(loaded.network, loaded.spec, loaded.history) == read_file(dir / "final.ckpt"));
  CHECK(load_checkpoint(dir / "best.ckpt").network.weights() == result.best.weights());

  const auto csv = read_file(dir / "history.csv");
  CHECK(csv == history_to_csv(result.history));
  CHECK(csv.rfind("epoch,train_loss,train_acc,val_loss,val_acc\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
  CHECK(history_from_json(history_to_json(result.history)) == result.history);
}

TEST_CASE("corrupt checkpoints are rejected") {
  const auto spec = small_spec();
  const auto net = build_network(spec);
  const std::string bytes = serialize_checkpoint(net, spec, {});
  CHECK(kind_of([&] { deserialize_checkpoint(bytes.substr(0, bytes.size() - 1)); }) == ErrorKind::Format);
  CHECK(kind_of([&] { deserialize_checkpoint(""); }) == ErrorKind::Format);
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  CHECK(kind_of([&] { deserialize_checkpoint(flipped); }) == ErrorKind::Format);
  auto version = bytes;
  version[8] = 2;
  try {
    deserialize_checkpoint(version);
    FAIL("accepted version 2");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Format);
    CHECK(std::string(e.what()).find("version 2") != std::string::npos);
  }

  auto wider = spec;
  wider.kernel_plan[0].filters += 1;
  CHECK(kind_of([&] { deserialize_checkpoint(serialize_checkpoint(net, wider, {})); }) == ErrorKind::Shape);
  auto deeper = spec;
  deeper.fc_plan = {3};
  CHECK(kind_of([&] { deserialize_checkpoint(serialize_checkpoint(net, deeper, {})); }) == ErrorKind::Shape);

  const auto dir = scratch("corrupt");
  write_file_atomic(dir / "cut.ckpt", bytes.substr(0, bytes.size() - 1));
  try {
    load_checkpoint(dir / "cut.ckpt");
    FAIL("accepted a truncated file");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("cut.ckpt") != std::string::npos);
  }
  CHECK(kind_of([&] { load_checkpoint(dir / "missing.ckpt"); }) == ErrorKind::Io);
}
