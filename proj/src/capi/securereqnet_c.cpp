#include "securereqnet/securereqnet.h"

#include <cstdlib>
#include <cstring>
#include <mutex>
#include <new>
#include <string>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"
#include "securereqnet/pipeline.hpp"

struct srn_corpus {
  std::vector<srn::Document> docs;
};

struct srn_embedding {
  srn::EmbeddingModel model;
};

struct srn_network {
  srn::ArchitectureSpec spec;
  srn::Network net;
};

namespace {

thread_local std::string g_last_error;

std::mutex g_log_mutex;
srn_log_fn g_log_fn = nullptr;
void* g_log_user = nullptr;

srn_status to_status(srn::ErrorKind kind) {
  switch (kind) {
    case srn::ErrorKind::Usage: return SRN_ERR_USAGE;
    case srn::ErrorKind::Data: return SRN_ERR_DATA;
    case srn::ErrorKind::Format: return SRN_ERR_FORMAT;
    case srn::ErrorKind::Shape: return SRN_ERR_SHAPE;
    case srn::ErrorKind::Numeric: return SRN_ERR_NUMERIC;
    case srn::ErrorKind::Io: return SRN_ERR_IO;
  }
  return SRN_ERR_INTERNAL;
}

template <typename F>
srn_status guarded(F&& body) {
  g_last_error.clear();
  try {
    body();
    return SRN_OK;
  } catch (const srn::Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
  } catch (const std::exception& e) {
    g_last_error = e.what();
  } catch (...) {
    g_last_error = "unknown error";
  }
  return SRN_ERR_INTERNAL;
}

void require(const void* p, const char* what) {
  if (p == nullptr) srn::fail(srn::ErrorKind::Usage, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void set_string(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

srn::RunConfig parse_config(const char* config_json) {
  if (config_json == nullptr || *config_json == '\0') return srn::RunConfig{};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(config_json);
  } catch (const nlohmann::json::parse_error& e) {
    srn::fail(srn::ErrorKind::Usage, "malformed config JSON at byte " + std::to_string(e.byte));
  }
  return srn::config_from_json(j);
}

srn::Logger current_logger() {
  return [](const std::string& line) {
    std::lock_guard lock(g_log_mutex);
    if (g_log_fn != nullptr) g_log_fn(line.c_str(), g_log_user);
  };
}

std::vector<std::filesystem::path> paths_of(const char* const* items, size_t n) {
  std::vector<std::filesystem::path> out;
  for (size_t i = 0; i < n; ++i) {
    require(items[i], "path");
    out.emplace_back(items[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* srn_version(void) { return "0.1.0"; }

const char* srn_last_error(void) { return g_last_error.c_str(); }

const char* srn_status_name(srn_status status) {
  switch (status) {
    case SRN_OK: return "ok";
    case SRN_ERR_USAGE: return "usage";
    case SRN_ERR_DATA: return "data";
    case SRN_ERR_FORMAT: return "format";
    case SRN_ERR_SHAPE: return "shape";
    case SRN_ERR_NUMERIC: return "numeric";
    case SRN_ERR_IO: return "io";
    case SRN_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

void srn_string_free(char* s) { std::free(s); }

void srn_set_logger(srn_log_fn fn, void* user) {
  std::lock_guard lock(g_log_mutex);
  g_log_fn = fn;
  g_log_user = user;
}

srn_status srn_config_resolve(const char* config_json, char** effective_json) {
  return guarded([&] {
    require(effective_json, "effective_json");
    *effective_json = dup_string(srn::config_to_json(parse_config(config_json)).dump(2));
  });
}

srn_status srn_config_echo(const char* config_json, const char* dir) {
  return guarded([&] {
    require(dir, "dir");
    srn::echo_config(parse_config(config_json), dir);
  });
}

srn_status srn_corpus_ingest(const char* const* nvd_paths, size_t n_nvd, const char* const* corpus_paths,
                             size_t n_corpus, srn_corpus** out, char** summary) {
  return guarded([&] {
    require(out, "out");
    if (n_nvd > 0) require(nvd_paths, "nvd_paths");
    if (n_corpus > 0) require(corpus_paths, "corpus_paths");
    auto result = srn::ingest(paths_of(nvd_paths, n_nvd), paths_of(corpus_paths, n_corpus));
    set_string(summary, result.summary.table());
    *out = new srn_corpus{std::move(result.documents)};
  });
}

srn_status srn_corpus_load(const char* path, srn_corpus** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new srn_corpus{srn::load_corpus_jsonl(path)};
  });
}

srn_status srn_corpus_save(const srn_corpus* corpus, const char* path) {
  return guarded([&] {
    require(corpus, "corpus");
    require(path, "path");
    srn::save_corpus_jsonl(corpus->docs, path);
  });
}

size_t srn_corpus_size(const srn_corpus* corpus) { return corpus == nullptr ? 0 : corpus->docs.size(); }

srn_status srn_corpus_split(const srn_corpus* corpus, const char* config_json, srn_corpus** train,
                            srn_corpus** validation, srn_corpus** test) {
  return guarded([&] {
    require(corpus, "corpus");
    require(train, "train");
    require(validation, "validation");
    require(test, "test");
    auto split = srn::split_corpus(corpus->docs, parse_config(config_json));
    *train = new srn_corpus{std::move(split.train)};
    *validation = new srn_corpus{std::move(split.validation)};
    *test = new srn_corpus{std::move(split.test)};
  });
}

srn_status srn_corpus_preprocess(const srn_corpus* corpus, const char* config_json, const char* cache_path) {
  return guarded([&] {
    require(corpus, "corpus");
    require(cache_path, "cache_path");
    const auto config = parse_config(config_json);
    srn::save_token_cache(srn::preprocess_corpus(corpus->docs, srn::stopwords_for(config)), cache_path);
  });
}

void srn_corpus_free(srn_corpus* corpus) { delete corpus; }

srn_status srn_embedding_train(const srn_corpus* corpus, const char* config_json, srn_embedding** out) {
  return guarded([&] {
    require(corpus, "corpus");
    require(out, "out");
    const auto config = parse_config(config_json);
    auto model = srn::train_embedding(srn::preprocess_corpus(corpus->docs, srn::stopwords_for(config)), config);
    *out = new srn_embedding{std::move(model)};
  });
}

srn_status srn_embedding_train_tokens(const char* cache_path, const char* config_json, srn_embedding** out) {
  return guarded([&] {
    require(cache_path, "cache_path");
    require(out, "out");
    *out = new srn_embedding{srn::train_embedding(srn::load_token_cache(cache_path), parse_config(config_json))};
  });
}

srn_status srn_embedding_load(const char* path, srn_embedding** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new srn_embedding{srn::load_embeddings(path)};
  });
}

srn_status srn_embedding_save(const srn_embedding* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    srn::save_embeddings(model->model, path);
  });
}

size_t srn_embedding_vocab_size(const srn_embedding* model) { return model == nullptr ? 0 : model->model.size(); }

size_t srn_embedding_dim(const srn_embedding* model) { return model == nullptr ? 0 : model->model.dim(); }

srn_status srn_embedding_neighbors(const srn_embedding* model, const char* token, size_t k, char** json) {
  return guarded([&] {
    require(model, "model");
    require(token, "token");
    require(json, "json");
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& n : srn::nearest_neighbors(model->model, token, k)) {
      arr.push_back({{"token", n.token}, {"similarity", n.similarity}});
    }
    *json = dup_string(arr.dump());
  });
}

void srn_embedding_free(srn_embedding* model) { delete model; }

srn_status srn_network_build(const char* config_json, size_t dim, srn_network** out, char** summary_json) {
  return guarded([&] {
    require(out, "out");
    const auto spec = srn::architecture_for(parse_config(config_json), dim);
    auto* handle = new srn_network{spec, srn::build_network(spec)};
    *out = handle;
    if (summary_json != nullptr) *summary_json = dup_string(handle->net.summary().dump(2));
  });
}

srn_status srn_network_train(const srn_corpus* train, const srn_corpus* validation, const srn_embedding* embedding,
                             const char* config_json, const char* checkpoint_dir, srn_network** best,
                             char** result_json) {
  return guarded([&] {
    require(train, "train");
    require(validation, "validation");
    require(embedding, "embedding");
    require(checkpoint_dir, "checkpoint_dir");
    require(best, "best");
    const auto config = parse_config(config_json);
    std::filesystem::create_directories(checkpoint_dir);
    srn::echo_config(config, checkpoint_dir);
    auto outcome = srn::train_classifier(embedding->model, train->docs, validation->docs, config, checkpoint_dir,
                                         current_logger());
    nlohmann::ordered_json result;
    result["params"] = outcome.result.best.count_params();
    result["best_epoch"] = outcome.result.history.best_epoch;
    result["stopped_epoch"] = outcome.result.history.stopped_epoch;
    result["summary"] = outcome.result.best.summary();
    set_string(result_json, result.dump(2));
    *best = new srn_network{outcome.spec, std::move(outcome.result.best)};
  });
}

srn_status srn_network_load(const char* checkpoint_path, srn_network** out) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(out, "out");
    auto ckpt = srn::load_checkpoint(checkpoint_path);
    *out = new srn_network{ckpt.spec, std::move(ckpt.network)};
  });
}

size_t srn_network_param_count(const srn_network* net) { return net == nullptr ? 0 : net->net.count_params(); }

srn_status srn_network_summary(const srn_network* net, char** summary_json) {
  return guarded([&] {
    require(net, "net");
    require(summary_json, "summary_json");
    *summary_json = dup_string(net->net.summary().dump(2));
  });
}

srn_status srn_network_evaluate(srn_network* net, const srn_embedding* embedding, const srn_corpus* test,
                                const char* config_json, int per_source, char** report_json) {
  return guarded([&] {
    require(net, "net");
    require(embedding, "embedding");
    require(test, "test");
    require(report_json, "report_json");
    const auto reports =
        srn::evaluate_documents(net->net, embedding->model, test->docs, parse_config(config_json), per_source != 0);
    if (per_source != 0) {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (const auto& r : reports) arr.push_back(srn::report_to_json(r));
      *report_json = dup_string(arr.dump(2));
    } else {
      *report_json = dup_string(srn::report_to_json(reports.front()).dump(2));
    }
  });
}

srn_status srn_network_predict_text(srn_network* net, const srn_embedding* embedding, const char* text,
                                    const char* config_json, double* p_sr) {
  return guarded([&] {
    require(net, "net");
    require(embedding, "embedding");
    require(text, "text");
    require(p_sr, "p_sr");
    srn::Document doc;
    doc.id = "0";
    doc.text = text;
    *p_sr = srn::predict_documents(net->net, embedding->model, {doc}, parse_config(config_json)).front().p_sr;
  });
}

srn_status srn_network_predict_batch(srn_network* net, const srn_embedding* embedding, const char* input,
                                     const char* config_json, char** output_jsonl) {
  return guarded([&] {
    require(net, "net");
    require(embedding, "embedding");
    require(input, "input");
    require(output_jsonl, "output_jsonl");
    const auto docs = srn::parse_prediction_input(input);
    *output_jsonl =
        dup_string(srn::predictions_to_jsonl(srn::predict_documents(net->net, embedding->model, docs, parse_config(config_json))));
  });
}

void srn_network_free(srn_network* net) { delete net; }

srn_status srn_pipeline_run(const srn_corpus* corpus, const char* config_json, const char* out_dir,
                            char** report_json) {
  return guarded([&] {
    require(corpus, "corpus");
    require(out_dir, "out_dir");
    const auto outputs = srn::run_pipeline(corpus->docs, parse_config(config_json), out_dir, current_logger());
    set_string(report_json, srn::report_to_json(outputs.report).dump(2));
  });
}

}  // extern "C"
