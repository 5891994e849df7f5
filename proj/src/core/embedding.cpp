#include "securereqnet/embedding.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "securereqnet/error.hpp"
#include "securereqnet/io.hpp"
#include "securereqnet/random.hpp"

namespace srn {
namespace {

double sigmoid(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double log_sigmoid(double x) { return x >= 0 ? -std::log1p(std::exp(-x)) : x - std::log1p(std::exp(x)); }

double dot(std::span<const double> a, std::span<const double> b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Loss of one (center, positive, negatives...) group; writes the gradient
// with respect to the center into `grad_center` and scales of the output
// gradients (d loss / d u_j = coeff_j * v) into `coeff`.
double sgns_kernel(std::span<const double> center, const std::vector<std::span<const double>>& outputs,
                   std::span<double> grad_center, std::span<double> coeff) {
  std::fill(grad_center.begin(), grad_center.end(), 0.0);
  double loss = 0.0;
  for (std::size_t j = 0; j < outputs.size(); ++j) {
    const double score = dot(outputs[j], center);
    const double target = j == 0 ? 1.0 : 0.0;
    loss -= j == 0 ? log_sigmoid(score) : log_sigmoid(-score);
    const double g = sigmoid(score) - target;
    coeff[j] = g;
    for (std::size_t i = 0; i < center.size(); ++i) grad_center[i] += g * outputs[j][i];
  }
  return loss;
}

class NegativeSampler {
 public:
  explicit NegativeSampler(const Vocabulary& vocab) {
    cumulative_.reserve(vocab.size());
    double total = 0.0;
    for (std::size_t i = 0; i < vocab.size(); ++i) {
      total += std::pow(static_cast<double>(vocab.count(i)), 0.75);
      cumulative_.push_back(total);
    }
    for (double& c : cumulative_) c /= total;
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
  }

 private:
  std::vector<double> cumulative_;
};

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace

EmbeddingModel::EmbeddingModel(Vocabulary vocabulary, std::size_t dim, std::vector<double> vectors)
    : vocabulary_(std::move(vocabulary)), dim_(dim), vectors_(std::move(vectors)) {
  if (dim_ == 0) fail(ErrorKind::Usage, "embedding dimension must be >= 1");
  if (vectors_.size() != vocabulary_.size() * dim_) {
    fail(ErrorKind::Shape, "embedding table size does not match vocabulary x dim");
  }
}

std::vector<std::pair<std::size_t, std::size_t>> generate_pairs(std::span<const std::size_t> indices,
                                                                 std::size_t window) {
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  const std::size_t n = indices.size();
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(n - 1, i + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) pairs.emplace_back(indices[i], indices[j]);
    }
  }
  return pairs;
}

SgnsGradients sgns_loss_and_gradients(std::span<const double> center,
                                      const std::vector<std::span<const double>>& outputs) {
  SgnsGradients g;
  g.center.assign(center.size(), 0.0);
  std::vector<double> coeff(outputs.size());
  g.loss = sgns_kernel(center, outputs, g.center, coeff);
  for (std::size_t j = 0; j < outputs.size(); ++j) {
    std::vector<double> row(center.size());
    for (std::size_t i = 0; i < center.size(); ++i) row[i] = coeff[j] * center[i];
    g.outputs.push_back(std::move(row));
  }
  return g;
}

EmbeddingModel train_skipgram(const std::vector<TokenSequence>& corpus, const SkipGramConfig& config) {
  if (config.dim == 0) fail(ErrorKind::Usage, "train_skipgram: dim must be >= 1");
  if (config.window == 0) fail(ErrorKind::Usage, "train_skipgram: window must be >= 1");
  Vocabulary vocab = build_vocabulary(corpus, config.min_count);
  if (vocab.size() == 0) fail(ErrorKind::Data, "train_skipgram: empty vocabulary");
  const std::size_t d = config.dim;
  const std::size_t v = vocab.size();

  std::vector<std::vector<std::size_t>> docs;
  std::size_t pairs_per_epoch = 0;
  for (const auto& seq : corpus) {
    std::vector<std::size_t> ids;
    for (const auto& t : seq.tokens) {
      if (auto i = vocab.index_of(t); i != Vocabulary::npos) ids.push_back(i);
    }
    pairs_per_epoch += generate_pairs(ids, config.window).size();
    docs.push_back(std::move(ids));
  }

  Rng rng(config.seed);
  std::vector<double> in(v * d);
  for (double& x : in) x = rng.uniform(-0.5 / static_cast<double>(d), 0.5 / static_cast<double>(d));
  std::vector<double> out(v * d, 0.0);
  const NegativeSampler sampler(vocab);

  auto row = [d](std::vector<double>& table, std::size_t i) { return std::span<double>(table.data() + i * d, d); };

  const double total = static_cast<double>(std::max<std::size_t>(1, pairs_per_epoch * config.epochs));
  std::size_t processed = 0;
  std::vector<std::size_t> targets;
  std::vector<std::span<const double>> outputs;
  std::vector<double> grad_center(d);
  std::vector<double> coeff;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (const auto& ids : docs) {
      for (const auto& [center, context] : generate_pairs(ids, config.window)) {
        const double lr = config.learning_rate *
                          std::max(1e-4, 1.0 - static_cast<double>(processed++) / total);
        targets.assign(1, context);
        for (std::size_t k = 0; k < config.negatives; ++k) {
          const std::size_t neg = sampler.draw(rng);
          if (neg != context) targets.push_back(neg);
        }
        outputs.clear();
        for (std::size_t t : targets) outputs.emplace_back(row(out, t));
        coeff.resize(targets.size());
        auto center_vec = row(in, center);
        sgns_kernel(center_vec, outputs, grad_center, coeff);
        for (std::size_t j = 0; j < targets.size(); ++j) {
          auto u = row(out, targets[j]);
          for (std::size_t i = 0; i < d; ++i) u[i] -= lr * coeff[j] * center_vec[i];
        }
        for (std::size_t i = 0; i < d; ++i) center_vec[i] -= lr * grad_center[i];
      }
    }
    const bool finite = std::all_of(in.begin(), in.end(), [](double x) { return std::isfinite(x); }) &&
                        std::all_of(out.begin(), out.end(), [](double x) { return std::isfinite(x); });
    if (!finite) fail(ErrorKind::Numeric, "train_skipgram: non-finite weights after epoch " + std::to_string(epoch + 1));
  }

  EmbeddingModel model(std::move(vocab), d, std::move(in));
  model.training_meta = config;
  return model;
}

std::vector<Neighbor> nearest_neighbors(const EmbeddingModel& model, std::string_view token, std::size_t k) {
  if (k < 1) fail(ErrorKind::Usage, "nearest_neighbors: k must be >= 1");
  const std::size_t query = model.vocabulary().index_of(token);
  if (query == Vocabulary::npos) fail(ErrorKind::Data, "nearest_neighbors: token '" + std::string(token) + "' not in vocabulary");
  auto norm = [](std::span<const double> x) { return std::sqrt(dot(x, x)); };
  const auto q = model.vector(query);
  const double qn = norm(q);

  std::vector<std::pair<double, std::size_t>> scored;
  for (std::size_t i = 0; i < model.size(); ++i) {
    if (i == query) continue;
    const auto x = model.vector(i);
    const double denom = qn * norm(x);
    scored.emplace_back(denom > 0 ? dot(q, x) / denom : 0.0, i);
  }
  const std::size_t take = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(take), scored.end(),
                    [](const auto& a, const auto& b) { return a.first != b.first ? a.first > b.first : a.second < b.second; });
  std::vector<Neighbor> out;
  for (std::size_t i = 0; i < take; ++i) out.push_back({model.vocabulary().token(scored[i].second), scored[i].first});
  return out;
}

DocumentMatrix vectorize_document(const EmbeddingModel& model, const TokenSequence& seq, std::size_t max_len) {
  if (max_len < 1) fail(ErrorKind::Usage, "vectorize_document: max_len must be >= 1");
  const std::size_t d = model.dim();
  DocumentMatrix m{seq.doc_id, Tensor({max_len, d}), 0, false};
  for (const auto& t : seq.tokens) {
    if (m.valid_rows == max_len) break;
    const std::size_t i = model.vocabulary().index_of(t);
    if (i == Vocabulary::npos) continue;
    const auto v = model.vector(i);
    std::copy(v.begin(), v.end(), m.rows.data() + m.valid_rows * d);
    ++m.valid_rows;
  }
  m.empty_warning = m.valid_rows == 0;
  return m;
}

std::string embeddings_to_text(const EmbeddingModel& model) {
  std::string out = std::to_string(model.size()) + " " + std::to_string(model.dim()) + "\n";
  for (std::size_t i = 0; i < model.size(); ++i) {
    out += model.vocabulary().token(i);
    for (double x : model.vector(i)) {
      out += ' ';
      out += format_double(x);
    }
    out += '\n';
  }
  return out;
}

EmbeddingModel parse_embeddings(std::string_view content) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= content.size()) return false;
    std::size_t end = content.find('\n', pos);
    if (end == std::string_view::npos) end = content.size();
    line = content.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++line_no;
    return true;
  };
  auto fields = [](std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && line[i] == ' ') ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ') ++i;
      if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
  };
  auto parse_size = [](std::string_view s, std::size_t& out) {
    return std::from_chars(s.data(), s.data() + s.size(), out).ec == std::errc{} && !s.empty();
  };

  std::string_view line;
  if (!next_line(line)) fail(ErrorKind::Format, "embedding file: empty");
  const auto header = fields(line);
  std::size_t v = 0, d = 0;
  if (header.size() != 2 || !parse_size(header[0], v) || !parse_size(header[1], d) || d == 0) {
    fail(ErrorKind::Format, "embedding file line 1: expected header '<vocab_size> <dim>'");
  }
  std::vector<std::string> tokens;
  std::vector<double> vectors;
  vectors.reserve(v * d);
  while (tokens.size() < v && next_line(line)) {
    const auto f = fields(line);
    if (f.empty()) continue;
    if (f.size() != d + 1) {
      fail(ErrorKind::Format, "embedding file line " + std::to_string(line_no) + ": expected " + std::to_string(d) +
                                  " values, got " + std::to_string(f.size() - 1));
    }
    tokens.emplace_back(f[0]);
    for (std::size_t i = 1; i <= d; ++i) {
      double x = 0;
      const auto res = std::from_chars(f[i].data(), f[i].data() + f[i].size(), x);
      if (res.ec != std::errc{} || res.ptr != f[i].data() + f[i].size() || !std::isfinite(x)) {
        fail(ErrorKind::Format, "embedding file line " + std::to_string(line_no) + ": bad number '" +
                                    std::string(f[i]) + "'");
      }
      vectors.push_back(x);
    }
  }
  if (tokens.size() != v) {
    fail(ErrorKind::Format, "embedding file: header declares " + std::to_string(v) + " rows, found " +
                                std::to_string(tokens.size()));
  }
  while (next_line(line)) {
    if (!fields(line).empty()) fail(ErrorKind::Format, "embedding file line " + std::to_string(line_no) + ": unexpected extra row");
  }
  return EmbeddingModel(Vocabulary(std::move(tokens), std::vector<std::uint64_t>(v, 0), 1), d, std::move(vectors));
}

void save_embeddings(const EmbeddingModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, embeddings_to_text(model));
}

EmbeddingModel load_embeddings(const std::filesystem::path& path) { return parse_embeddings(read_file(path)); }

}  // namespace srn
