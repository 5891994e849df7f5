// Command line front end. Talks to the library only through the C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "securereqnet/securereqnet.h"

namespace {

using json = nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Carries a failed C API status up to main.
struct Failure {
  srn_status status;
  std::string message;
};

int exit_code(srn_status status) {
  switch (status) {
    case SRN_OK: return kExitOk;
    case SRN_ERR_USAGE: return kExitUsage;
    case SRN_ERR_NUMERIC: return kExitNumeric;
    default: return kExitData;
  }
}

void check(srn_status status) {
  if (status != SRN_OK) throw Failure{status, srn_last_error()};
}

[[noreturn]] void usage_error(const std::string& message) { throw Failure{SRN_ERR_USAGE, message}; }

// Owns a string returned by the C API.
struct OwnedString {
  char* p = nullptr;
  ~OwnedString() { srn_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

template <typename T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(p); }
};
using Corpus = Handle<srn_corpus, srn_corpus_free>;
using Embedding = Handle<srn_embedding, srn_embedding_free>;
using NetworkHandle = Handle<srn_network, srn_network_free>;

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{SRN_ERR_IO, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out || !(out << content)) throw Failure{SRN_ERR_IO, "cannot write " + path};
}

void log_to_stderr(const char* line, void*) { std::fprintf(stderr, "%s\n", line); }

// Config file plus flag overrides; flags win.
struct ConfigBuilder {
  std::string config_path;
  std::int64_t seed = -1;
  json overrides = json::object();

  void set(const std::string& section, const std::string& key, json value) { overrides[section][key] = std::move(value); }

  std::string build() const {
    json j = json::object();
    if (!config_path.empty()) {
      try {
        j = json::parse(read_text(config_path));
      } catch (const json::parse_error& e) {
        usage_error(config_path + ": malformed config JSON at byte " + std::to_string(e.byte));
      }
      if (!j.is_object()) usage_error(config_path + ": config must be a JSON object");
    }
    for (const auto& [section, values] : overrides.items()) {
      for (const auto& [key, value] : values.items()) j[section][key] = value;
    }
    if (seed >= 0) j["seed"] = seed;
    // Round-trip through the library so the result has every default resolved.
    OwnedString effective;
    check(srn_config_resolve(j.dump().c_str(), &effective.p));
    return effective.str();
  }
};

void add_shared(CLI::App* cmd, ConfigBuilder& cfg, std::string& out, bool out_required, const std::string& out_help) {
  cmd->add_option("--config", cfg.config_path, "JSON run config")->check(CLI::ExistingFile);
  cmd->add_option("--seed", cfg.seed, "Global seed (overrides the config)")->check(CLI::NonNegativeNumber);
  auto* opt = cmd->add_option("--out", out, out_help);
  if (out_required) opt->required();
}

std::string format_layer(const json& layer, int indent) {
  std::string pad(static_cast<std::size_t>(indent), ' ');
  std::string line = pad + layer.value("kind", "?");
  for (const auto& [key, value] : layer.items()) {
    if (key == "kind" || key == "branches") continue;
    line += " " + key + "=" + value.dump();
  }
  line += "\n";
  if (layer.contains("branches")) {
    int b = 0;
    for (const auto& branch : layer["branches"]) {
      line += pad + "  branch " + std::to_string(b++) + ":\n";
      for (const auto& inner : branch) line += format_layer(inner, indent + 4);
    }
  }
  return line;
}

void print_summary(const std::string& summary_json) {
  const auto j = json::parse(summary_json);
  std::cout << "input: " << j["input"].dump() << "\n";
  for (const auto& layer : j["layers"]) std::cout << format_layer(layer, 2);
}

int run(int argc, char** argv) {
  CLI::App app{"Security-related issue classification pipeline"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(srn_version()));
  bool quiet = false;
  app.add_flag("-q,--quiet", quiet, "Suppress key=value log lines on stderr");

  ConfigBuilder cfg;
  std::string out;

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Merge NVD feeds and corpus JSONL files into one corpus");
  std::vector<std::string> nvd_files, corpus_files;
  ingest->add_option("--nvd", nvd_files, "NVD JSON 1.1 feed")->check(CLI::ExistingFile);
  ingest->add_option("--corpus", corpus_files, "Corpus JSONL file")->check(CLI::ExistingFile);
  add_shared(ingest, cfg, out, true, "Output corpus JSONL");

  // preprocess
  auto* preprocess = app.add_subcommand("preprocess", "Tokenize, drop stopwords and stem into a token cache");
  std::string corpus_path;
  preprocess->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  add_shared(preprocess, cfg, out, true, "Output token cache JSONL");

  // split
  auto* split = app.add_subcommand("split", "Split labeled documents into train/validation/test");
  split->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  auto* temporal = split->add_flag("--temporal,!--random", "Temporal test split (default from config)");
  auto* balance = split->add_flag("--balance", "Balance classes before splitting");
  add_shared(split, cfg, out, true, "Output directory");

  // embed
  auto* embed = app.add_subcommand("embed", "Train skip-gram word embeddings");
  std::string tokens_path;
  std::size_t dim = 0, window = 0, negatives = 0, emb_epochs = 0;
  auto* embed_corpus = embed->add_option("--corpus", corpus_path, "Raw corpus JSONL")->check(CLI::ExistingFile);
  auto* embed_tokens = embed->add_option("--tokens", tokens_path, "Token cache JSONL")->check(CLI::ExistingFile);
  embed_corpus->excludes(embed_tokens);
  embed->add_option("--dim", dim, "Embedding dimension")->check(CLI::PositiveNumber);
  embed->add_option("--window", window, "Context window")->check(CLI::PositiveNumber);
  embed->add_option("--negatives", negatives, "Negative samples per pair");
  embed->add_option("--epochs", emb_epochs, "Passes over the corpus")->check(CLI::PositiveNumber);
  add_shared(embed, cfg, out, true, "Output embedding text file");

  // train
  auto* train = app.add_subcommand("train", "Train a classifier with early stopping");
  std::string train_path, val_path, embedding_path, arch;
  std::size_t max_epochs = 0, patience = 0, max_len = 0, batch = 0;
  bool dry_run = false;
  train->add_option("--train", train_path, "Training corpus JSONL")->check(CLI::ExistingFile);
  train->add_option("--validation", val_path, "Validation corpus JSONL")->check(CLI::ExistingFile);
  train->add_option("--embedding", embedding_path, "Embedding file")->check(CLI::ExistingFile);
  train->add_option("--arch", arch, "shallow, deep, alex or alpha")
      ->check(CLI::IsMember({"shallow", "deep", "alex", "alpha"}));
  train->add_option("--max-epochs", max_epochs)->check(CLI::PositiveNumber);
  train->add_option("--patience", patience)->check(CLI::PositiveNumber);
  train->add_option("--max-len", max_len, "Document length in tokens")->check(CLI::PositiveNumber);
  train->add_option("--batch-size", batch)->check(CLI::PositiveNumber);
  train->add_option("--dim", dim, "Embedding dimension for --dry-run without --embedding")->check(CLI::PositiveNumber);
  train->add_flag("--dry-run", dry_run, "Build the architecture and print its summary only");
  add_shared(train, cfg, out, false, "Checkpoint directory");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a labeled corpus");
  std::string checkpoint, test_path;
  bool per_source = false;
  eval->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  eval->add_option("--embedding", embedding_path)->required()->check(CLI::ExistingFile);
  eval->add_option("--test", test_path, "Labeled corpus JSONL")->required()->check(CLI::ExistingFile);
  eval->add_flag("--per-source", per_source, "One report per document source");
  add_shared(eval, cfg, out, false, "Report JSON path (default stdout)");

  // predict
  auto* predict = app.add_subcommand("predict", "Score texts with a trained checkpoint");
  std::string text, input_path;
  predict->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  predict->add_option("--embedding", embedding_path)->required()->check(CLI::ExistingFile);
  auto* text_opt = predict->add_option("--text", text, "A single text");
  auto* input_opt = predict->add_option("--input", input_path, "JSONL with id/text, or one text per line")
                        ->check(CLI::ExistingFile);
  text_opt->excludes(input_opt);
  add_shared(predict, cfg, out, false, "Output JSONL path (default stdout)");

  // run
  auto* run_cmd = app.add_subcommand("run", "split, embed, train and evaluate in one go");
  run_cmd->add_option("--corpus", corpus_path, "Corpus JSONL")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--arch", arch)->check(CLI::IsMember({"shallow", "deep", "alex", "alpha"}));
  run_cmd->add_option("--max-epochs", max_epochs)->check(CLI::PositiveNumber);
  run_cmd->add_option("--patience", patience)->check(CLI::PositiveNumber);
  run_cmd->add_option("--max-len", max_len)->check(CLI::PositiveNumber);
  run_cmd->add_option("--dim", dim)->check(CLI::PositiveNumber);
  add_shared(run_cmd, cfg, out, true, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  if (!quiet) srn_set_logger(log_to_stderr, nullptr);
  if (dim > 0) cfg.set("embedding", "dim", dim);
  if (window > 0) cfg.set("embedding", "window", window);
  if (embed->count("--negatives") > 0) cfg.set("embedding", "negatives", negatives);
  if (emb_epochs > 0) cfg.set("embedding", "epochs", emb_epochs);
  if (!arch.empty()) cfg.set("architecture", "name", arch);
  if (max_epochs > 0) cfg.set("training", "max_epochs", max_epochs);
  if (patience > 0) cfg.set("training", "patience", patience);
  if (max_len > 0) cfg.set("training", "max_len", max_len);
  if (batch > 0) cfg.set("training", "batch_size", batch);
  if (temporal->count() > 0) cfg.set("split", "temporal", temporal->as<bool>());
  if (balance->count() > 0) cfg.set("split", "balance", true);
  const std::string config = cfg.build();
  const auto config_json = json::parse(config);

  if (*ingest) {
    // Fall back to the config's path lists when no files are given.
    if (nvd_files.empty() && corpus_files.empty()) {
      for (const auto& p : config_json["paths"]["nvd"]) nvd_files.push_back(p.get<std::string>());
      for (const auto& p : config_json["paths"]["corpus"]) corpus_files.push_back(p.get<std::string>());
    }
    if (nvd_files.empty() && corpus_files.empty()) usage_error("ingest: give at least one --nvd or --corpus file");
    std::vector<const char*> nvd, corp;
    for (const auto& s : nvd_files) nvd.push_back(s.c_str());
    for (const auto& s : corpus_files) corp.push_back(s.c_str());
    Corpus c;
    OwnedString summary;
    check(srn_corpus_ingest(nvd.data(), nvd.size(), corp.data(), corp.size(), &c.p, &summary.p));
    check(srn_corpus_save(c.p, out.c_str()));
    std::cout << summary.str();
    return kExitOk;
  }

  if (*preprocess) {
    Corpus c;
    check(srn_corpus_load(corpus_path.c_str(), &c.p));
    check(srn_corpus_preprocess(c.p, config.c_str(), out.c_str()));
    std::cout << "documents: " << srn_corpus_size(c.p) << "\n";
    return kExitOk;
  }

  if (*split) {
    Corpus c, tr, va, te;
    check(srn_corpus_load(corpus_path.c_str(), &c.p));
    check(srn_corpus_split(c.p, config.c_str(), &tr.p, &va.p, &te.p));
    check(srn_corpus_save(tr.p, (out + "/train.jsonl").c_str()));
    check(srn_corpus_save(va.p, (out + "/validation.jsonl").c_str()));
    check(srn_corpus_save(te.p, (out + "/test.jsonl").c_str()));
    check(srn_config_echo(config.c_str(), out.c_str()));
    std::cout << "train: " << srn_corpus_size(tr.p) << ", validation: " << srn_corpus_size(va.p)
              << ", test: " << srn_corpus_size(te.p) << "\n";
    return kExitOk;
  }

  if (*embed) {
    Embedding e;
    if (!tokens_path.empty()) {
      check(srn_embedding_train_tokens(tokens_path.c_str(), config.c_str(), &e.p));
    } else {
      if (corpus_path.empty()) usage_error("embed: give --corpus or --tokens");
      Corpus c;
      check(srn_corpus_load(corpus_path.c_str(), &c.p));
      check(srn_embedding_train(c.p, config.c_str(), &e.p));
    }
    check(srn_embedding_save(e.p, out.c_str()));
    std::cout << "vocab: " << srn_embedding_vocab_size(e.p) << ", dim: " << srn_embedding_dim(e.p) << "\n";
    return kExitOk;
  }

  if (*train) {
    if (embedding_path.empty()) embedding_path = config_json["paths"]["embedding"].get<std::string>();
    if (dry_run) {
      std::size_t d = config_json["embedding"]["dim"].get<std::size_t>();
      Embedding e;
      if (!embedding_path.empty()) {
        check(srn_embedding_load(embedding_path.c_str(), &e.p));
        d = srn_embedding_dim(e.p);
      }
      NetworkHandle net;
      OwnedString summary;
      check(srn_network_build(config.c_str(), d, &net.p, &summary.p));
      std::cout << "arch: " << config_json["architecture"]["name"].get<std::string>() << "\n";
      std::cout << "params: " << srn_network_param_count(net.p) << "\n";
      print_summary(summary.str());
      return kExitOk;
    }
    if (train_path.empty() || val_path.empty() || embedding_path.empty()) {
      usage_error("train: --train, --validation and --embedding are required (or use --dry-run)");
    }
    if (out.empty()) out = config_json["paths"]["checkpoint_dir"].get<std::string>();
    if (out.empty()) usage_error("train: --out (checkpoint directory) is required");
    Corpus tr, va;
    Embedding e;
    check(srn_corpus_load(train_path.c_str(), &tr.p));
    check(srn_corpus_load(val_path.c_str(), &va.p));
    check(srn_embedding_load(embedding_path.c_str(), &e.p));
    NetworkHandle net;
    OwnedString result;
    check(srn_network_train(tr.p, va.p, e.p, config.c_str(), out.c_str(), &net.p, &result.p));
    const auto r = json::parse(result.str());
    std::cout << "arch: " << config_json["architecture"]["name"].get<std::string>() << "\n";
    std::cout << "params: " << r["params"].get<std::size_t>() << "\n";
    std::cout << "best_epoch: " << r["best_epoch"].get<std::size_t>() << "\n";
    std::cout << "stopped_epoch: " << r["stopped_epoch"].get<std::size_t>() << "\n";
    print_summary(r["summary"].dump());
    return kExitOk;
  }

  if (*eval) {
    NetworkHandle net;
    Embedding e;
    Corpus te;
    check(srn_network_load(checkpoint.c_str(), &net.p));
    check(srn_embedding_load(embedding_path.c_str(), &e.p));
    check(srn_corpus_load(test_path.c_str(), &te.p));
    OwnedString report;
    check(srn_network_evaluate(net.p, e.p, te.p, config.c_str(), per_source ? 1 : 0, &report.p));
    write_text(out, report.str() + "\n");
    const auto r = json::parse(report.str());
    for (const auto& item : r.is_array() ? r : json::array({r})) {
      for (const auto& w : item.value("warnings", json::array())) {
        std::fprintf(stderr, "warning: %s\n", w.get<std::string>().c_str());
      }
    }
    return kExitOk;
  }

  if (*predict) {
    NetworkHandle net;
    Embedding e;
    check(srn_network_load(checkpoint.c_str(), &net.p));
    check(srn_embedding_load(embedding_path.c_str(), &e.p));
    std::string input;
    if (!input_path.empty()) {
      input = read_text(input_path);
    } else if (text_opt->count() > 0) {
      json record = {{"id", "text"}, {"text", text}};
      input = record.dump();
    } else {
      std::ostringstream ss;
      ss << std::cin.rdbuf();
      input = ss.str();
    }
    OwnedString output;
    check(srn_network_predict_batch(net.p, e.p, input.c_str(), config.c_str(), &output.p));
    write_text(out, output.str());
    return kExitOk;
  }

  if (*run_cmd) {
    Corpus c;
    check(srn_corpus_load(corpus_path.c_str(), &c.p));
    OwnedString report;
    check(srn_pipeline_run(c.p, config.c_str(), out.c_str(), &report.p));
    std::cout << report.str() << "\n";
    return kExitOk;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    std::fprintf(stderr, "error (%s): %s\n", srn_status_name(f.status), f.message.c_str());
    return exit_code(f.status);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitData;
  }
}
