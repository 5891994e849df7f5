#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "securereqnet/architectures.hpp"
#include "securereqnet/corpus.hpp"
#include "securereqnet/embedding.hpp"
#include "securereqnet/evaluator.hpp"
#include "securereqnet/preprocess.hpp"
#include "securereqnet/trainer.hpp"

// End-to-end glue used by the C API and the command line tool: one config
// object, one global seed, and the file layout of each pipeline stage.
namespace srn {

/// Receives one key=value log line at a time (no trailing newline).
using Logger = std::function<void(const std::string&)>;

struct RunConfig {
  std::uint64_t seed = 0;

  std::vector<std::filesystem::path> nvd_feeds;
  std::vector<std::filesystem::path> corpus_files;
  std::filesystem::path stopwords;  // empty: the shipped English list
  std::filesystem::path embedding_file;
  std::filesystem::path checkpoint_dir;

  std::uint64_t min_count = 1;
  SkipGramConfig embedding;  // seed is derived from `seed`

  ArchName arch = ArchName::Shallow;
  std::size_t filters_per_kernel = 128;
  std::size_t second_conv_filters = 128;
  std::size_t conv5_filters = 64;
  std::optional<std::vector<std::size_t>> fc_plan;

  TrainingConfig training;  // seed and checkpoint_dir are filled in per run

  SplitRatios ratios;
  bool temporal_split = true;
  bool balance = false;

  double threshold = 0.5;
};

/// Every field, defaults resolved.
nlohmann::ordered_json config_to_json(const RunConfig& config);
/// Overlays the given keys on the defaults; unknown keys are usage errors.
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

StopwordList stopwords_for(const RunConfig& config);
ArchitectureSpec architecture_for(const RunConfig& config, std::size_t dim);

struct SourceCounts {
  std::size_t sr = 0;
  std::size_t nonsr = 0;
  std::size_t unlabeled = 0;
  std::size_t total() const { return sr + nonsr + unlabeled; }
};

struct IngestSummary {
  std::map<Source, SourceCounts> per_source;
  std::size_t nvd_skipped = 0;
  std::size_t exact_duplicates = 0;

  /// Per-source table followed by a "CVE: n, issues: m" line.
  std::string table() const;
};

struct IngestResult {
  std::vector<Document> documents;
  IngestSummary summary;
};

/// One batch of documents read from a single input file.
struct SourceBatch {
  std::string origin;
  std::vector<Document> documents;
  std::size_t skipped = 0;
  bool from_nvd = false;
};

/// Concatenates batches in order. A repeated id within one batch is dropped
/// when the records are identical; any other repeat is a data error listing
/// the ids.
IngestResult merge_sources(std::vector<SourceBatch> batches);
IngestResult ingest(const std::vector<std::filesystem::path>& nvd_feeds,
                    const std::vector<std::filesystem::path>& corpus_files);

std::vector<TokenSequence> preprocess_corpus(const std::vector<Document>& docs, const StopwordList& stoplist);

/// Optional balancing, then make_split, with seeds derived from config.seed.
SplitBundle split_corpus(const std::vector<Document>& docs, const RunConfig& config);

EmbeddingModel train_embedding(const std::vector<TokenSequence>& corpus, const RunConfig& config);

struct LabeledMatrices {
  Dataset data;
  std::vector<std::string> ids;
  std::vector<Source> sources;
  std::size_t empty_documents = 0;  // no in-vocabulary token
};

/// Every document must carry a label.
LabeledMatrices vectorize_labeled(const EmbeddingModel& model, const std::vector<Document>& docs,
                                  const StopwordList& stoplist, std::size_t max_len);

struct TrainOutcome {
  ArchitectureSpec spec;
  TrainingResult result;
};

/// Builds the configured architecture and trains it. Checkpoints go to
/// `checkpoint_dir` when it is non-empty.
TrainOutcome train_classifier(const EmbeddingModel& model, const std::vector<Document>& train_docs,
                              const std::vector<Document>& val_docs, const RunConfig& config,
                              const std::filesystem::path& checkpoint_dir, const Logger& log = {});

/// One report over all documents, or one per source (sorted by source name).
std::vector<EvaluationReport> evaluate_documents(Network& net, const EmbeddingModel& model,
                                                 const std::vector<Document>& docs, const RunConfig& config,
                                                 bool per_source);

struct Prediction {
  std::string id;
  double p_sr = 0.0;
  Label label = Label::NonSR;
};

std::vector<Prediction> predict_documents(Network& net, const EmbeddingModel& model,
                                          const std::vector<Document>& docs, const RunConfig& config);
/// {"id", "p_sr", "label"} per line.
std::string predictions_to_jsonl(const std::vector<Prediction>& predictions);

/// Reads prediction input: JSONL records with "id" and "text", or plain text
/// with one document per non-blank line (ids are line numbers).
std::vector<Document> parse_prediction_input(std::string_view content);

struct PipelineOutputs {
  SplitBundle split;
  EmbeddingModel embedding;
  TrainOutcome trained;
  EvaluationReport report;
};

/// split -> embed (train + validation + unlabeled text) -> train -> evaluate
/// the best network on the test split. Writes config.json, split/*.jsonl,
/// embeddings.txt, checkpoints/{best,final}.ckpt, checkpoints/history.csv and
/// report.json under `out_dir`.
PipelineOutputs run_pipeline(const std::vector<Document>& docs, const RunConfig& config,
                             const std::filesystem::path& out_dir, const Logger& log = {});

/// Writes the effective config as pretty JSON to `dir`/config.json.
void echo_config(const RunConfig& config, const std::filesystem::path& dir);

}  // namespace srn
