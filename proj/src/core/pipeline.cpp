#include "securereqnet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"

namespace srn {
namespace {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

// Reads the keys of one config object and rejects the ones nobody asked for.
class Section {
 public:
  Section(const json& j, std::string name) : j_(j), name_(std::move(name)) {
    if (!j_.is_object()) fail(ErrorKind::Usage, "config: '" + display() + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end() || it->is_null()) return;
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      fail(ErrorKind::Usage, "config: '" + path(key) + "' has the wrong type (" + std::string(it->type_name()) + ")");
    }
  }

  void read_path(const char* key, std::filesystem::path& out) {
    std::string s = out.string();
    read(key, s);
    out = s;
  }

  void read_paths(const char* key, std::vector<std::filesystem::path>& out) {
    std::vector<std::string> items;
    for (const auto& p : out) items.push_back(p.string());
    read(key, items);
    out.assign(items.begin(), items.end());
  }

  Section child(const char* key) {
    seen_.insert(key);
    static const json empty = json::object();
    const auto it = j_.find(key);
    return Section(it == j_.end() || it->is_null() ? empty : *it, path(key));
  }

  void finish() const {
    for (const auto& [key, _] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorKind::Usage, "config: unknown key '" + path(key.c_str()) + "'");
    }
  }

 private:
  std::string display() const { return name_.empty() ? "<root>" : name_; }
  std::string path(const std::string& key) const { return name_.empty() ? key : name_ + "." + key; }

  const json& j_;
  std::string name_;
  std::set<std::string> seen_;
};

std::vector<std::string> path_strings(const std::vector<std::filesystem::path>& paths) {
  std::vector<std::string> out;
  for (const auto& p : paths) out.push_back(p.string());
  return out;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void log_line(const Logger& log, const std::string& line) {
  if (log) log(line);
}

EvaluationReport score_matrices(Network& net, const LabeledMatrices& m, double threshold) {
  std::vector<double> scores;
  scores.reserve(m.data.size());
  for (const auto& x : m.data.inputs) scores.push_back(predict(net, x));
  auto report = evaluate_scores(scores, m.data.labels, threshold);
  if (m.empty_documents > 0) {
    report.warnings.push_back(std::to_string(m.empty_documents) + " document(s) had no in-vocabulary tokens");
  }
  return report;
}

}  // namespace

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["paths"] = {{"nvd", path_strings(c.nvd_feeds)},
                {"corpus", path_strings(c.corpus_files)},
                {"stopwords", c.stopwords.string()},
                {"embedding", c.embedding_file.string()},
                {"checkpoint_dir", c.checkpoint_dir.string()}};
  j["preprocess"] = {{"min_count", c.min_count}};
  j["embedding"] = {{"dim", c.embedding.dim},
                    {"window", c.embedding.window},
                    {"negatives", c.embedding.negatives},
                    {"epochs", c.embedding.epochs},
                    {"learning_rate", c.embedding.learning_rate}};
  ordered_json arch = {{"name", to_string(c.arch)},
                       {"filters_per_kernel", c.filters_per_kernel},
                       {"second_conv_filters", c.second_conv_filters},
                       {"conv5_filters", c.conv5_filters}};
  arch["fc_plan"] = c.fc_plan ? ordered_json(*c.fc_plan) : ordered_json(nullptr);
  j["architecture"] = arch;
  const auto& t = c.training;
  j["training"] = {{"max_epochs", t.max_epochs},
                   {"patience", t.patience},
                   {"batch_size", t.batch_size},
                   {"min_delta", t.min_delta},
                   {"dropout_rate", t.dropout_rate},
                   {"max_len", t.max_len},
                   {"optimizer",
                    {{"kind", to_string(t.optimizer.kind)},
                     {"learning_rate", t.optimizer.learning_rate},
                     {"beta1", t.optimizer.beta1},
                     {"beta2", t.optimizer.beta2},
                     {"epsilon", t.optimizer.epsilon}}}};
  j["split"] = {{"train", c.ratios.train},
                {"validation", c.ratios.validation},
                {"test", c.ratios.test},
                {"temporal", c.temporal_split},
                {"balance", c.balance}};
  j["evaluation"] = {{"threshold", c.threshold}};
  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Section root(j, "");
  root.read("seed", c.seed);

  auto paths = root.child("paths");
  paths.read_paths("nvd", c.nvd_feeds);
  paths.read_paths("corpus", c.corpus_files);
  paths.read_path("stopwords", c.stopwords);
  paths.read_path("embedding", c.embedding_file);
  paths.read_path("checkpoint_dir", c.checkpoint_dir);
  paths.finish();

  auto pre = root.child("preprocess");
  pre.read("min_count", c.min_count);
  pre.finish();

  auto emb = root.child("embedding");
  emb.read("dim", c.embedding.dim);
  emb.read("window", c.embedding.window);
  emb.read("negatives", c.embedding.negatives);
  emb.read("epochs", c.embedding.epochs);
  emb.read("learning_rate", c.embedding.learning_rate);
  emb.finish();

  auto arch = root.child("architecture");
  std::string arch_name(to_string(c.arch));
  arch.read("name", arch_name);
  c.arch = parse_arch_name(arch_name);
  arch.read("filters_per_kernel", c.filters_per_kernel);
  arch.read("second_conv_filters", c.second_conv_filters);
  arch.read("conv5_filters", c.conv5_filters);
  std::vector<std::size_t> fc;
  arch.read("fc_plan", fc);
  if (!fc.empty()) c.fc_plan = fc;
  arch.finish();

  auto tr = root.child("training");
  tr.read("max_epochs", c.training.max_epochs);
  tr.read("patience", c.training.patience);
  tr.read("batch_size", c.training.batch_size);
  tr.read("min_delta", c.training.min_delta);
  tr.read("dropout_rate", c.training.dropout_rate);
  tr.read("max_len", c.training.max_len);
  auto opt = tr.child("optimizer");
  std::string kind(to_string(c.training.optimizer.kind));
  opt.read("kind", kind);
  c.training.optimizer.kind = parse_optimizer(kind);
  opt.read("learning_rate", c.training.optimizer.learning_rate);
  opt.read("beta1", c.training.optimizer.beta1);
  opt.read("beta2", c.training.optimizer.beta2);
  opt.read("epsilon", c.training.optimizer.epsilon);
  opt.finish();
  tr.finish();

  auto split = root.child("split");
  split.read("train", c.ratios.train);
  split.read("validation", c.ratios.validation);
  split.read("test", c.ratios.test);
  split.read("temporal", c.temporal_split);
  split.read("balance", c.balance);
  split.finish();

  auto ev = root.child("evaluation");
  ev.read("threshold", c.threshold);
  ev.finish();
  root.finish();

  if (c.training.max_epochs < 1 || c.training.patience < 1 || c.training.batch_size < 1) {
    fail(ErrorKind::Usage, "config: training.max_epochs, patience and batch_size must be >= 1");
  }
  if (c.training.max_len < 1) fail(ErrorKind::Usage, "config: training.max_len must be >= 1");
  if (c.embedding.dim < 1) fail(ErrorKind::Usage, "config: embedding.dim must be >= 1");
  if (c.min_count < 1) fail(ErrorKind::Usage, "config: preprocess.min_count must be >= 1");
  if (!(c.threshold >= 0.0 && c.threshold <= 1.0)) fail(ErrorKind::Usage, "config: evaluation.threshold must be in [0, 1]");

  std::vector<std::filesystem::path> inputs = c.nvd_feeds;
  inputs.insert(inputs.end(), c.corpus_files.begin(), c.corpus_files.end());
  if (!c.stopwords.empty()) inputs.push_back(c.stopwords);
  for (const auto& p : inputs) {
    if (!std::filesystem::is_regular_file(p)) fail(ErrorKind::Io, "config: input file not found: " + p.string());
  }
  return c;
}

RunConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::Usage, path.string() + ": malformed config JSON at byte " + std::to_string(e.byte));
  }
  try {
    return config_from_json(j);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

void echo_config(const RunConfig& config, const std::filesystem::path& dir) {
  write_file_atomic(dir / "config.json", config_to_json(config).dump(2) + "\n");
}

StopwordList stopwords_for(const RunConfig& config) {
  return config.stopwords.empty() ? StopwordList::english() : StopwordList::load(config.stopwords);
}

ArchitectureSpec architecture_for(const RunConfig& config, std::size_t dim) {
  const std::size_t len = config.training.max_len;
  ArchitectureSpec spec;
  switch (config.arch) {
    case ArchName::Shallow: spec = shallow_spec(len, dim, config.filters_per_kernel); break;
    case ArchName::Deep: spec = deep_spec(len, dim, config.filters_per_kernel, config.second_conv_filters); break;
    case ArchName::AlexSRN: spec = alex_spec(len, dim); break;
    case ArchName::AlphaSRN: spec = alpha_spec(len, dim, config.conv5_filters); break;
  }
  if (config.fc_plan) spec.fc_plan = *config.fc_plan;
  spec.dropout_rate = config.training.dropout_rate;
  spec.seed = derive_seed(config.seed, SeedStream::Init);
  return spec;
}

std::string IngestSummary::table() const {
  char row[128];
  std::string out;
  std::snprintf(row, sizeof row, "%-12s %8s %8s %10s %8s\n", "source", "sr", "nonsr", "unlabeled", "total");
  out += row;
  SourceCounts sum;
  for (const auto& [source, c] : per_source) {
    std::snprintf(row, sizeof row, "%-12s %8zu %8zu %10zu %8zu\n", std::string(to_string(source)).c_str(), c.sr,
                  c.nonsr, c.unlabeled, c.total());
    out += row;
    sum.sr += c.sr;
    sum.nonsr += c.nonsr;
    sum.unlabeled += c.unlabeled;
  }
  std::snprintf(row, sizeof row, "%-12s %8zu %8zu %10zu %8zu\n", "total", sum.sr, sum.nonsr, sum.unlabeled, sum.total());
  out += row;
  auto count = [&](Source s) {
    const auto it = per_source.find(s);
    return it == per_source.end() ? std::size_t{0} : it->second.total();
  };
  out += "CVE: " + std::to_string(count(Source::CVE)) +
         ", issues: " + std::to_string(count(Source::GitLabIssue) + count(Source::GitHubIssue)) + "\n";
  return out;
}

IngestResult merge_sources(std::vector<SourceBatch> batches) {
  IngestResult result;
  std::map<std::string, std::pair<std::size_t, std::size_t>> seen;  // id -> (batch, index in result)
  std::set<std::string> duplicates;
  for (std::size_t b = 0; b < batches.size(); ++b) {
    if (batches[b].from_nvd) result.summary.nvd_skipped += batches[b].skipped;
    for (auto& doc : batches[b].documents) {
      const auto it = seen.find(doc.id);
      if (it != seen.end()) {
        if (it->second.first == b && result.documents[it->second.second] == doc) {
          ++result.summary.exact_duplicates;
        } else {
          duplicates.insert(doc.id);
        }
        continue;
      }
      seen.emplace(doc.id, std::make_pair(b, result.documents.size()));
      auto& counts = result.summary.per_source[doc.source];
      if (!doc.label) {
        ++counts.unlabeled;
      } else if (*doc.label == Label::SR) {
        ++counts.sr;
      } else {
        ++counts.nonsr;
      }
      result.documents.push_back(std::move(doc));
    }
  }
  if (!duplicates.empty()) {
    std::string list;
    for (const auto& id : duplicates) list += (list.empty() ? "" : ", ") + id;
    fail(ErrorKind::Data, "duplicate document ids: " + list);
  }
  return result;
}

IngestResult ingest(const std::vector<std::filesystem::path>& nvd_feeds,
                    const std::vector<std::filesystem::path>& corpus_files) {
  std::vector<SourceBatch> batches;
  for (const auto& path : nvd_feeds) {
    NvdParseResult parsed;
    try {
      parsed = parse_nvd_feed(read_file(path));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Io) throw;
      throw Error(e.kind(), path.string() + ": " + e.what());
    }
    batches.push_back({path.string(), std::move(parsed.documents), parsed.skipped, true});
  }
  for (const auto& path : corpus_files) batches.push_back({path.string(), load_corpus_jsonl(path), 0, false});
  return merge_sources(std::move(batches));
}

std::vector<TokenSequence> preprocess_corpus(const std::vector<Document>& docs, const StopwordList& stoplist) {
  std::vector<TokenSequence> out;
  out.reserve(docs.size());
  for (const auto& d : docs) out.push_back(preprocess_document(d, stoplist));
  return out;
}

SplitBundle split_corpus(const std::vector<Document>& docs, const RunConfig& config) {
  std::vector<Document> labeled;
  for (const auto& d : docs) {
    if (d.label) labeled.push_back(d);
  }
  if (config.balance) labeled = balance_classes(labeled, derive_seed(config.seed, SeedStream::Balance));
  return make_split(labeled, derive_seed(config.seed, SeedStream::Split), config.temporal_split, config.ratios);
}

EmbeddingModel train_embedding(const std::vector<TokenSequence>& corpus, const RunConfig& config) {
  SkipGramConfig sg = config.embedding;
  sg.min_count = config.min_count;
  sg.seed = derive_seed(config.seed, SeedStream::Embedding);
  return train_skipgram(corpus, sg);
}

LabeledMatrices vectorize_labeled(const EmbeddingModel& model, const std::vector<Document>& docs,
                                  const StopwordList& stoplist, std::size_t max_len) {
  LabeledMatrices m;
  for (const auto& d : docs) {
    if (!d.label) fail(ErrorKind::Data, "document '" + d.id + "' has no label");
    auto matrix = vectorize_document(model, preprocess_document(d, stoplist), max_len);
    if (matrix.empty_warning) ++m.empty_documents;
    m.data.inputs.push_back(std::move(matrix.rows));
    m.data.labels.push_back(*d.label == Label::SR ? 1 : 0);
    m.ids.push_back(d.id);
    m.sources.push_back(d.source);
  }
  return m;
}

TrainOutcome train_classifier(const EmbeddingModel& model, const std::vector<Document>& train_docs,
                              const std::vector<Document>& val_docs, const RunConfig& config,
                              const std::filesystem::path& checkpoint_dir, const Logger& log) {
  const auto stoplist = stopwords_for(config);
  const auto spec = architecture_for(config, model.dim());
  Network net = build_network(spec);
  log_line(log, "event=build arch=" + std::string(to_string(spec.name)) + " params=" + std::to_string(net.count_params()) +
                    " length=" + std::to_string(spec.length) + " dim=" + std::to_string(spec.dim));

  const auto train_m = vectorize_labeled(model, train_docs, stoplist, config.training.max_len);
  const auto val_m = vectorize_labeled(model, val_docs, stoplist, config.training.max_len);
  if (train_m.empty_documents + val_m.empty_documents > 0) {
    log_line(log, "event=warning empty_documents=" + std::to_string(train_m.empty_documents + val_m.empty_documents));
  }

  TrainingConfig tc = config.training;
  tc.seed = derive_seed(config.seed, SeedStream::Training);
  tc.checkpoint_dir = checkpoint_dir;
  auto user_hook = tc.on_epoch_end;
  tc.on_epoch_end = [&](EpochRecord& r, Network& n) {
    if (user_hook) user_hook(r, n);
    log_line(log, "event=epoch epoch=" + std::to_string(r.epoch) + " train_loss=" + format_double(r.train_loss) +
                      " train_acc=" + format_double(r.train_acc) + " val_loss=" + format_double(r.val_loss) +
                      " val_acc=" + format_double(r.val_acc));
  };
  auto result = train(net, spec, train_m.data, val_m.data, tc);
  log_line(log, "event=trained best_epoch=" + std::to_string(result.history.best_epoch) +
                    " stopped_epoch=" + std::to_string(result.history.stopped_epoch));
  return {spec, std::move(result)};
}

std::vector<EvaluationReport> evaluate_documents(Network& net, const EmbeddingModel& model,
                                                 const std::vector<Document>& docs, const RunConfig& config,
                                                 bool per_source) {
  if (docs.empty()) fail(ErrorKind::Data, "evaluation set is empty");
  const auto stoplist = stopwords_for(config);
  const std::size_t max_len = net.input_shape().at(0);
  if (net.input_shape().at(1) != model.dim()) {
    fail(ErrorKind::Shape, "network expects dim " + std::to_string(net.input_shape().at(1)) + ", embedding has dim " +
                               std::to_string(model.dim()));
  }
  if (!per_source) return {score_matrices(net, vectorize_labeled(model, docs, stoplist, max_len), config.threshold)};

  std::map<std::string, std::vector<Document>> groups;
  for (const auto& d : docs) groups[std::string(to_string(d.source))].push_back(d);
  std::vector<EvaluationReport> reports;
  for (const auto& [name, group] : groups) {
    auto report = score_matrices(net, vectorize_labeled(model, group, stoplist, max_len), config.threshold);
    report.source = name;
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<Prediction> predict_documents(Network& net, const EmbeddingModel& model,
                                          const std::vector<Document>& docs, const RunConfig& config) {
  const auto stoplist = stopwords_for(config);
  const std::size_t max_len = net.input_shape().at(0);
  if (net.input_shape().at(1) != model.dim()) {
    fail(ErrorKind::Shape, "network expects dim " + std::to_string(net.input_shape().at(1)) + ", embedding has dim " +
                               std::to_string(model.dim()));
  }
  std::vector<Prediction> out;
  for (const auto& d : docs) {
    const auto matrix = vectorize_document(model, preprocess_document(d, stoplist), max_len);
    const double p = predict(net, matrix.rows);
    out.push_back({d.id, p, p >= config.threshold ? Label::SR : Label::NonSR});
  }
  return out;
}

std::string predictions_to_jsonl(const std::vector<Prediction>& predictions) {
  std::string out;
  for (const auto& p : predictions) {
    ordered_json j;
    j["id"] = p.id;
    j["p_sr"] = p.p_sr;
    j["label"] = to_string(p.label);
    out += j.dump() + "\n";
  }
  return out;
}

std::vector<Document> parse_prediction_input(std::string_view content) {
  std::vector<Document> docs;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < content.size()) {
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    std::string_view line = content.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;

    Document doc;
    const auto first = line.find_first_not_of(" \t");
    if (line[first] == '{') {
      json record;
      try {
        record = json::parse(line);
      } catch (const json::parse_error& e) {
        fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": malformed JSON at byte " + std::to_string(e.byte));
      }
      if (!record.contains("text") || !record["text"].is_string()) {
        fail(ErrorKind::Format, "line " + std::to_string(line_no) + ": missing required field 'text'");
      }
      doc.text = record["text"].get<std::string>();
      doc.id = record.contains("id") && record["id"].is_string() ? record["id"].get<std::string>()
                                                                  : std::to_string(line_no);
    } else {
      doc.id = std::to_string(line_no);
      doc.text = std::string(line);
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

PipelineOutputs run_pipeline(const std::vector<Document>& docs, const RunConfig& config,
                             const std::filesystem::path& out_dir, const Logger& log) {
  std::filesystem::create_directories(out_dir);
  echo_config(config, out_dir);

  auto split = split_corpus(docs, config);
  log_line(log, "event=split train=" + std::to_string(split.train.size()) +
                    " validation=" + std::to_string(split.validation.size()) + " test=" + std::to_string(split.test.size()) +
                    " temporal=" + (config.temporal_split ? "true" : "false"));
  for (const auto& [name, part] : {std::pair{"train", &split.train}, std::pair{"validation", &split.validation},
                                   std::pair{"test", &split.test}}) {
    save_corpus_jsonl(*part, out_dir / "split" / (std::string(name) + ".jsonl"));
  }

  // The embedding never sees test documents.
  std::vector<Document> embed_docs = split.train;
  embed_docs.insert(embed_docs.end(), split.validation.begin(), split.validation.end());
  for (const auto& d : docs) {
    if (!d.label) embed_docs.push_back(d);
  }
  const auto stoplist = stopwords_for(config);
  auto embedding = train_embedding(preprocess_corpus(embed_docs, stoplist), config);
  save_embeddings(embedding, out_dir / "embeddings.txt");
  log_line(log, "event=embed vocab=" + std::to_string(embedding.size()) + " dim=" + std::to_string(embedding.dim()));

  auto trained = train_classifier(embedding, split.train, split.validation, config, out_dir / "checkpoints", log);

  auto report = evaluate_documents(trained.result.best, embedding, split.test, config, false).front();
  write_file_atomic(out_dir / "report.json", report_to_json(report).dump(2) + "\n");
  write_file_atomic(out_dir / "roc.csv", roc_to_csv(report.roc));
  log_line(log, "event=evaluate n=" + std::to_string(report.n_samples) + " accuracy=" + format_double(report.accuracy) +
                    " auc=" + (report.auc ? format_double(*report.auc) : std::string("none")) +
                    " loss=" + format_double(report.loss));
  return {std::move(split), std::move(embedding), std::move(trained), std::move(report)};
}

}  // namespace srn
