/* C interface to the securereqnet library.
 *
 * Objects are opaque handles released with their matching *_free function.
 * Every call that can fail returns an srn_status; on failure the message is
 * available from srn_last_error() on the same thread until the next call.
 * Strings returned through char** out-parameters are owned by the caller and
 * released with srn_string_free().
 *
 * Configuration arguments are JSON documents (see the README for the
 * schema); NULL or "" means all defaults.
 */
#ifndef SECUREREQNET_H
#define SECUREREQNET_H

#include <stddef.h>

#if defined(_WIN32)
#define SRN_API __declspec(dllexport)
#elif defined(SRN_BUILDING_LIBRARY)
#define SRN_API __attribute__((visibility("default")))
#else
#define SRN_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum srn_status {
  SRN_OK = 0,
  SRN_ERR_USAGE = 1,   /* invalid argument or configuration */
  SRN_ERR_DATA = 2,    /* input violates a data contract */
  SRN_ERR_FORMAT = 3,  /* malformed file */
  SRN_ERR_SHAPE = 4,   /* architecture / input shape mismatch */
  SRN_ERR_NUMERIC = 5, /* non-finite values during training */
  SRN_ERR_IO = 6,
  SRN_ERR_INTERNAL = 7
} srn_status;

typedef struct srn_corpus srn_corpus;
typedef struct srn_embedding srn_embedding;
typedef struct srn_network srn_network;

/* Receives key=value log lines. */
typedef void (*srn_log_fn)(const char* line, void* user);

SRN_API const char* srn_version(void);
SRN_API const char* srn_last_error(void);
SRN_API const char* srn_status_name(srn_status status);
SRN_API void srn_string_free(char* s);
/* Process-wide; NULL disables logging. */
SRN_API void srn_set_logger(srn_log_fn fn, void* user);

/* Merges config JSON over the defaults and returns the effective config. */
SRN_API srn_status srn_config_resolve(const char* config_json, char** effective_json);
/* Writes the effective config to dir/config.json. */
SRN_API srn_status srn_config_echo(const char* config_json, const char* dir);

/* ---- corpus ---- */

/* Reads NVD JSON feeds and corpus JSONL files, merges them and reports
 * per-source counts as a text table in *summary (may be NULL). */
SRN_API srn_status srn_corpus_ingest(const char* const* nvd_paths, size_t n_nvd, const char* const* corpus_paths,
                                     size_t n_corpus, srn_corpus** out, char** summary);
SRN_API srn_status srn_corpus_load(const char* path, srn_corpus** out);
SRN_API srn_status srn_corpus_save(const srn_corpus* corpus, const char* path);
SRN_API size_t srn_corpus_size(const srn_corpus* corpus);
/* Balances (if configured) and splits the labeled documents. */
SRN_API srn_status srn_corpus_split(const srn_corpus* corpus, const char* config_json, srn_corpus** train,
                                    srn_corpus** validation, srn_corpus** test);
/* Writes the preprocessed token cache (JSONL {"id", "tokens"}). */
SRN_API srn_status srn_corpus_preprocess(const srn_corpus* corpus, const char* config_json, const char* cache_path);
SRN_API void srn_corpus_free(srn_corpus* corpus);

/* ---- embedding ---- */

SRN_API srn_status srn_embedding_train(const srn_corpus* corpus, const char* config_json, srn_embedding** out);
/* Trains from a token cache written by srn_corpus_preprocess. */
SRN_API srn_status srn_embedding_train_tokens(const char* cache_path, const char* config_json, srn_embedding** out);
SRN_API srn_status srn_embedding_load(const char* path, srn_embedding** out);
SRN_API srn_status srn_embedding_save(const srn_embedding* model, const char* path);
SRN_API size_t srn_embedding_vocab_size(const srn_embedding* model);
SRN_API size_t srn_embedding_dim(const srn_embedding* model);
/* JSON array of {"token", "similarity"}. */
SRN_API srn_status srn_embedding_neighbors(const srn_embedding* model, const char* token, size_t k, char** json);
SRN_API void srn_embedding_free(srn_embedding* model);

/* ---- networks ---- */

/* Builds the configured architecture without training and returns its
 * layer summary JSON. */
SRN_API srn_status srn_network_build(const char* config_json, size_t dim, srn_network** out, char** summary_json);
/* Trains the configured architecture. Writes best.ckpt, final.ckpt and
 * history.csv into checkpoint_dir (required). *best receives the best-epoch
 * network; *result_json (may be NULL) receives
 * {"params", "best_epoch", "stopped_epoch", "summary"}. */
SRN_API srn_status srn_network_train(const srn_corpus* train, const srn_corpus* validation,
                                     const srn_embedding* embedding, const char* config_json,
                                     const char* checkpoint_dir, srn_network** best, char** result_json);
SRN_API srn_status srn_network_load(const char* checkpoint_path, srn_network** out);
SRN_API size_t srn_network_param_count(const srn_network* net);
SRN_API srn_status srn_network_summary(const srn_network* net, char** summary_json);
/* Report JSON; with per_source != 0 an array of reports, one per source. */
SRN_API srn_status srn_network_evaluate(srn_network* net, const srn_embedding* embedding, const srn_corpus* test,
                                        const char* config_json, int per_source, char** report_json);
/* SR probability of one raw text. */
SRN_API srn_status srn_network_predict_text(srn_network* net, const srn_embedding* embedding, const char* text,
                                            const char* config_json, double* p_sr);
/* Input: JSONL records with "id" and "text", or one text per line.
 * Output: JSONL {"id", "p_sr", "label"} in input order. */
SRN_API srn_status srn_network_predict_batch(srn_network* net, const srn_embedding* embedding, const char* input,
                                             const char* config_json, char** output_jsonl);
SRN_API void srn_network_free(srn_network* net);

/* ---- whole pipeline ---- */

/* split -> embed -> train -> evaluate into out_dir; *report_json (may be
 * NULL) receives the test report. */
SRN_API srn_status srn_pipeline_run(const srn_corpus* corpus, const char* config_json, const char* out_dir,
                                    char** report_json);

#ifdef __cplusplus
}
#endif

#endif /* SECUREREQNET_H */
