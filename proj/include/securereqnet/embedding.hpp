#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "securereqnet/preprocess.hpp"
#include "securereqnet/tensor.hpp"

namespace srn {

struct SkipGramConfig {
  std::size_t dim = 100;
  std::size_t window = 5;
  std::size_t negatives = 5;
  std::size_t epochs = 5;
  double learning_rate = 0.025;  // decays linearly towards zero over training
  std::uint64_t min_count = 1;
  std::uint64_t seed = 0;
};

class EmbeddingModel {
 public:
  EmbeddingModel() = default;
  EmbeddingModel(Vocabulary vocabulary, std::size_t dim, std::vector<double> vectors);

  const Vocabulary& vocabulary() const { return vocabulary_; }
  std::size_t dim() const { return dim_; }
  std::size_t size() const { return vocabulary_.size(); }
  std::span<const double> vector(std::size_t index) const { return {vectors_.data() + index * dim_, dim_}; }
  const std::vector<double>& vectors() const { return vectors_; }

  SkipGramConfig training_meta;

  /// Equal tokens (in order), dimension, and vectors. Counts are not part
  /// of the text format and are ignored.
  bool same_table(const EmbeddingModel& other) const {
    return dim_ == other.dim_ && vocabulary_.tokens() == other.vocabulary_.tokens() && vectors_ == other.vectors_;
  }

 private:
  Vocabulary vocabulary_;
  std::size_t dim_ = 0;
  std::vector<double> vectors_;
};

struct DocumentMatrix {
  std::string doc_id;
  Tensor rows;  // max_len x dim
  std::size_t valid_rows = 0;
  bool empty_warning = false;  // no in-vocabulary tokens
};

/// Context pairs within `window` positions, ordered by center then context position.
std::vector<std::pair<std::size_t, std::size_t>> generate_pairs(std::span<const std::size_t> indices,
                                                                 std::size_t window);

/// Negative-sampling objective for one center word against one positive and
/// several negative output vectors (positive first):
///   -log s(u_0 . v) - sum_k log s(-u_k . v)
struct SgnsGradients {
  double loss = 0.0;
  std::vector<double> center;                // d loss / d v
  std::vector<std::vector<double>> outputs;  // d loss / d u_j
};
SgnsGradients sgns_loss_and_gradients(std::span<const double> center,
                                      const std::vector<std::span<const double>>& outputs);

EmbeddingModel train_skipgram(const std::vector<TokenSequence>& corpus, const SkipGramConfig& config);

struct Neighbor {
  std::string token;
  double similarity;
};
std::vector<Neighbor> nearest_neighbors(const EmbeddingModel& model, std::string_view token, std::size_t k);

DocumentMatrix vectorize_document(const EmbeddingModel& model, const TokenSequence& seq, std::size_t max_len);

/// word2vec text format: "<V> <dim>" header, then "<token> v_1 ... v_dim".
std::string embeddings_to_text(const EmbeddingModel& model);
EmbeddingModel parse_embeddings(std::string_view content);
void save_embeddings(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_embeddings(const std::filesystem::path& path);

}  // namespace srn
