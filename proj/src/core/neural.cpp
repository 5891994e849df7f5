#include "securereqnet/neural.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>

#include "securereqnet/error.hpp"

namespace srn {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using MatMap = Eigen::Map<RowMat>;
using ConstMatMap = Eigen::Map<const RowMat>;
using ConstStridedMap = Eigen::Map<const RowMat, 0, Eigen::OuterStride<>>;
using VecMap = Eigen::Map<Vec>;
using ConstVecMap = Eigen::Map<const Vec>;

void require_rank(const Shape& shape, std::size_t rank, std::string_view who) {
  if (shape.size() != rank) {
    fail(ErrorKind::Shape, std::string(who) + ": expected rank-" + std::to_string(rank) + " input, got " +
                               shape_to_string(shape));
  }
}

Parameter make_param(std::string name, Shape shape) {
  Tensor value(shape);
  Tensor grad(std::move(shape));
  return Parameter{std::move(name), std::move(value), std::move(grad)};
}

void glorot_uniform(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& x : t.values()) x = rng.uniform(-limit, limit);
}

// Conv core over raw buffers: out [P, F] = windows(input) * K^T + b.
void conv_apply(const double* input, std::size_t length, std::size_t width, const Tensor& kernels, const Tensor& bias,
                std::size_t ngram, Tensor& out) {
  const std::size_t positions = length - ngram + 1;
  const std::size_t filters = kernels.dim(0);
  ConstStridedMap windows(input, static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(ngram * width),
                          Eigen::OuterStride<>(static_cast<Eigen::Index>(width)));
  ConstMatMap k(kernels.data(), static_cast<Eigen::Index>(filters), static_cast<Eigen::Index>(ngram * width));
  MatMap y(out.data(), static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(filters));
  y.noalias() = windows * k.transpose();
  y.rowwise() += ConstVecMap(bias.data(), static_cast<Eigen::Index>(filters)).transpose();
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv: return "conv";
    case LayerKind::GlobalMaxPool: return "global_max_pool";
    case LayerKind::MaxPool: return "max_pool";
    case LayerKind::Flatten: return "flatten";
    case LayerKind::Dense: return "dense";
    case LayerKind::ReLU: return "relu";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Softmax: return "softmax";
    case LayerKind::Concat: return "concat";
  }
  return "unknown";
}

nlohmann::ordered_json Layer::describe() const {
  nlohmann::ordered_json j;
  j["kind"] = to_string(kind());
  return j;
}

std::size_t Layer::parameter_count() {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

// ---------------------------------------------------------------------------
// Free-standing computations

Tensor conv_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias) {
  require_rank(input.shape(), 2, "conv_forward");
  if (kernels.rank() != 2 || bias.rank() != 1 || bias.dim(0) != kernels.dim(0)) {
    fail(ErrorKind::Shape, "conv_forward: kernels must be [F, n*W] and bias [F]");
  }
  const std::size_t length = input.dim(0);
  const std::size_t width = input.dim(1);
  if (width == 0 || kernels.dim(1) % width != 0) {
    fail(ErrorKind::Shape, "conv_forward: kernel does not span the input width " + std::to_string(width));
  }
  const std::size_t ngram = kernels.dim(1) / width;
  if (ngram == 0 || ngram > length) {
    fail(ErrorKind::Shape, "conv_forward: " + std::to_string(ngram) + "-gram kernel longer than input length " +
                               std::to_string(length));
  }
  Tensor out({length - ngram + 1, kernels.dim(0)});
  conv_apply(input.data(), length, width, kernels, bias, ngram, out);
  return out;
}

double global_max_pool(std::span<const double> feature_map) {
  if (feature_map.empty()) fail(ErrorKind::Shape, "global_max_pool: empty feature map");
  return *std::max_element(feature_map.begin(), feature_map.end());
}

Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias) {
  if (x.rank() != 1 || weights.rank() != 2 || bias.rank() != 1 || weights.dim(1) != x.dim(0) ||
      weights.dim(0) != bias.dim(0)) {
    fail(ErrorKind::Shape, "dense_forward: shapes " + shape_to_string(weights.shape()) + " x " +
                               shape_to_string(x.shape()) + " + " + shape_to_string(bias.shape()) + " do not agree");
  }
  Tensor y({weights.dim(0)});
  ConstMatMap w(weights.data(), static_cast<Eigen::Index>(weights.dim(0)), static_cast<Eigen::Index>(weights.dim(1)));
  VecMap(y.data(), static_cast<Eigen::Index>(y.size())).noalias() =
      w * ConstVecMap(x.data(), static_cast<Eigen::Index>(x.size())) +
      ConstVecMap(bias.data(), static_cast<Eigen::Index>(bias.size()));
  return y;
}

std::vector<double> softmax(std::span<const double> z) {
  if (z.size() < 2) fail(ErrorKind::Shape, "softmax: need at least 2 logits");
  if (!std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v); })) {
    fail(ErrorKind::Numeric, "softmax: non-finite logit");
  }
  const double top = *std::max_element(z.begin(), z.end());
  std::vector<double> p(z.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) sum += (p[i] = std::exp(z[i] - top));
  for (double& v : p) v /= sum;
  return p;
}

Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::Usage, "dropout: rate must be in [0, 1)");
  if (mode == Mode::Infer || rate == 0.0) return x;
  Tensor y = x;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : y.values()) v = rng.uniform() < rate ? 0.0 : v * keep_scale;
  return y;
}

double bce_loss(double p, int y) {
  const double q = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
  return y ? -std::log(q) : -std::log(1.0 - q);
}

double bce_gradient(double p, int y) {
  const double q = std::clamp(p, kBceEpsilon, 1.0 - kBceEpsilon);
  return y ? -1.0 / q : 1.0 / (1.0 - q);
}

// ---------------------------------------------------------------------------
// Conv

Conv::Conv(std::size_t ngram, std::size_t input_width, std::size_t filters)
    : ngram_(ngram),
      width_(input_width),
      filters_(filters),
      kernels_(make_param("kernels", {filters, ngram * input_width})),
      bias_(make_param("bias", {filters})) {
  if (ngram == 0 || input_width == 0 || filters == 0) fail(ErrorKind::Shape, "conv: ngram, width and filters must be >= 1");
}

Shape Conv::output_shape(const Shape& input) const {
  require_rank(input, 2, "conv");
  if (input[1] != width_) {
    fail(ErrorKind::Shape, "conv: kernel width " + std::to_string(width_) + " does not match input " + shape_to_string(input));
  }
  if (input[0] < ngram_) {
    fail(ErrorKind::Shape, "conv: " + std::to_string(ngram_) + "-gram kernel longer than input length " +
                               std::to_string(input[0]));
  }
  return {input[0] - ngram_ + 1, filters_};
}

Tensor Conv::forward(const Tensor& x, Mode, Rng&) {
  Tensor out(output_shape(x.shape()));
  input_ = x;
  conv_apply(x.data(), x.dim(0), width_, kernels_.value, bias_.value, ngram_, out);
  return out;
}

Tensor Conv::backward(const Tensor& grad_out, bool need_input_grad) {
  const auto positions = static_cast<Eigen::Index>(grad_out.dim(0));
  const auto filters = static_cast<Eigen::Index>(filters_);
  const auto span = static_cast<Eigen::Index>(ngram_ * width_);
  const auto width = static_cast<Eigen::Index>(width_);
  ConstMatMap g(grad_out.data(), positions, filters);
  ConstStridedMap windows(input_.data(), positions, span, Eigen::OuterStride<>(width));
  MatMap(kernels_.grad.data(), filters, span).noalias() += g.transpose() * windows;
  VecMap(bias_.grad.data(), filters) += g.colwise().sum().transpose();
  if (!need_input_grad) return {};

  const RowMat grad_windows = g * ConstMatMap(kernels_.value.data(), filters, span);
  Tensor grad_in(input_.shape());
  MatMap gi(grad_in.data(), static_cast<Eigen::Index>(input_.dim(0)), width);
  for (std::size_t k = 0; k < ngram_; ++k) {
    gi.block(static_cast<Eigen::Index>(k), 0, positions, width) +=
        grad_windows.block(0, static_cast<Eigen::Index>(k) * width, positions, width);
  }
  return grad_in;
}

void Conv::initialize(Rng& rng) {
  glorot_uniform(kernels_.value, ngram_ * width_, ngram_ * filters_, rng);
  bias_.value.fill(0.0);
}

nlohmann::ordered_json Conv::describe() const {
  auto j = Layer::describe();
  j["ngram"] = ngram_;
  j["filters"] = filters_;
  return j;
}

// ---------------------------------------------------------------------------
// Pooling

MaxPool::MaxPool(std::size_t window, std::size_t stride) : window_(window), stride_(stride) {
  if (window == 0 || stride == 0) fail(ErrorKind::Shape, "max_pool: window and stride must be >= 1");
}

Shape MaxPool::output_shape(const Shape& input) const {
  require_rank(input, 2, "max_pool");
  if (input[0] < window_) {
    fail(ErrorKind::Shape, "max_pool: window " + std::to_string(window_) + " longer than input length " +
                               std::to_string(input[0]));
  }
  return {(input[0] - window_) / stride_ + 1, input[1]};
}

Tensor MaxPool::forward(const Tensor& x, Mode, Rng&) {
  const Shape out_shape = output_shape(x.shape());
  input_shape_ = x.shape();
  Tensor out(out_shape);
  argmax_.assign(out.size(), 0);
  const std::size_t width = x.dim(1);
  for (std::size_t p = 0; p < out_shape[0]; ++p) {
    for (std::size_t c = 0; c < width; ++c) {
      std::size_t best = p * stride_;
      for (std::size_t r = best + 1; r < p * stride_ + window_; ++r) {
        if (x.at(r, c) > x.at(best, c)) best = r;
      }
      out.at(p, c) = x.at(best, c);
      argmax_[p * width + c] = best * width + c;
    }
  }
  return out;
}

Tensor MaxPool::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  Tensor grad_in(input_shape_);
  for (std::size_t i = 0; i < grad_out.size(); ++i) grad_in[argmax_[i]] += grad_out[i];
  return grad_in;
}

nlohmann::ordered_json MaxPool::describe() const {
  auto j = Layer::describe();
  j["window"] = window_;
  j["stride"] = stride_;
  return j;
}

Shape GlobalMaxPool::output_shape(const Shape& input) const {
  require_rank(input, 2, "global_max_pool");
  if (input[0] == 0) fail(ErrorKind::Shape, "global_max_pool: empty feature map");
  return {input[1]};
}

Tensor GlobalMaxPool::forward(const Tensor& x, Mode, Rng&) {
  const Shape out_shape = output_shape(x.shape());
  input_shape_ = x.shape();
  const std::size_t width = x.dim(1);
  Tensor out(out_shape);
  argmax_.assign(width, 0);
  for (std::size_t c = 0; c < width; ++c) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < x.dim(0); ++r) {
      if (x.at(r, c) > x.at(best, c)) best = r;
    }
    out[c] = x.at(best, c);
    argmax_[c] = best * width + c;
  }
  return out;
}

Tensor GlobalMaxPool::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  Tensor grad_in(input_shape_);
  for (std::size_t c = 0; c < grad_out.size(); ++c) grad_in[argmax_[c]] += grad_out[c];
  return grad_in;
}

// ---------------------------------------------------------------------------
// Elementwise and reshaping layers

Tensor Flatten::forward(const Tensor& x, Mode, Rng&) {
  input_shape_ = x.shape();
  return x.reshaped({x.size()});
}

Tensor Flatten::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  return grad_out.reshaped(input_shape_);
}

Tensor ReLU::forward(const Tensor& x, Mode, Rng&) {
  input_ = x;
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor ReLU::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(input_[i] > 0.0)) g[i] = 0.0;
  }
  return g;
}

Dropout::Dropout(double rate) : rate_(rate) {
  if (!(rate >= 0.0 && rate < 1.0)) fail(ErrorKind::Usage, "dropout: rate must be in [0, 1)");
}

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng& rng) {
  scale_.assign(x.size(), 1.0);
  if (mode == Mode::Infer || rate_ == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - rate_);
  Tensor y = x;
  for (std::size_t i = 0; i < y.size(); ++i) {
    scale_[i] = rng.uniform() < rate_ ? 0.0 : keep_scale;
    y[i] *= scale_[i];
  }
  return y;
}

Tensor Dropout::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  Tensor g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) g[i] *= scale_[i];
  return g;
}

nlohmann::ordered_json Dropout::describe() const {
  auto j = Layer::describe();
  j["rate"] = rate_;
  return j;
}

Shape Softmax::output_shape(const Shape& input) const {
  require_rank(input, 1, "softmax");
  if (input[0] < 2) fail(ErrorKind::Shape, "softmax: need at least 2 logits");
  return input;
}

Tensor Softmax::forward(const Tensor& x, Mode, Rng&) {
  output_shape(x.shape());
  output_ = Tensor(x.shape(), softmax(x.values()));
  return output_;
}

Tensor Softmax::backward(const Tensor& grad_out, bool need_input_grad) {
  if (!need_input_grad) return {};
  double dot = 0.0;
  for (std::size_t i = 0; i < grad_out.size(); ++i) dot += grad_out[i] * output_[i];
  Tensor g(output_.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = output_[i] * (grad_out[i] - dot);
  return g;
}

// ---------------------------------------------------------------------------
// Dense

Dense::Dense(std::size_t inputs, std::size_t outputs)
    : inputs_(inputs),
      outputs_(outputs),
      weights_(make_param("weights", {outputs, inputs})),
      bias_(make_param("bias", {outputs})) {
  if (inputs == 0 || outputs == 0) fail(ErrorKind::Shape, "dense: sizes must be >= 1");
}

Shape Dense::output_shape(const Shape& input) const {
  if (input.size() != 1 || input[0] != inputs_) {
    fail(ErrorKind::Shape, "dense: expected input [" + std::to_string(inputs_) + "], got " + shape_to_string(input));
  }
  return {outputs_};
}

Tensor Dense::forward(const Tensor& x, Mode, Rng&) {
  output_shape(x.shape());
  input_ = x;
  return dense_forward(x, weights_.value, bias_.value);
}

Tensor Dense::backward(const Tensor& grad_out, bool need_input_grad) {
  const auto q = static_cast<Eigen::Index>(outputs_);
  const auto p = static_cast<Eigen::Index>(inputs_);
  ConstVecMap g(grad_out.data(), q);
  MatMap(weights_.grad.data(), q, p).noalias() += g * ConstVecMap(input_.data(), p).transpose();
  VecMap(bias_.grad.data(), q) += g;
  if (!need_input_grad) return {};
  Tensor grad_in({inputs_});
  VecMap(grad_in.data(), p).noalias() = ConstMatMap(weights_.value.data(), q, p).transpose() * g;
  return grad_in;
}

void Dense::initialize(Rng& rng) {
  glorot_uniform(weights_.value, inputs_, outputs_, rng);
  bias_.value.fill(0.0);
}

nlohmann::ordered_json Dense::describe() const {
  auto j = Layer::describe();
  j["units"] = outputs_;
  return j;
}

// ---------------------------------------------------------------------------
// Concat

Concat::Concat(std::vector<LayerStack> branches) : branches_(std::move(branches)) {
  if (branches_.empty()) fail(ErrorKind::Shape, "concat: need at least one branch");
}

Concat::Concat(const Concat& other) : Layer(other), widths_(other.widths_) {
  for (const auto& branch : other.branches_) {
    LayerStack copy;
    for (const auto& layer : branch) copy.push_back(layer->clone());
    branches_.push_back(std::move(copy));
  }
}

Shape Concat::output_shape(const Shape& input) const {
  std::size_t total = 0;
  for (const auto& branch : branches_) {
    Shape s = input;
    for (const auto& layer : branch) s = layer->output_shape(s);
    if (s.size() != 1) fail(ErrorKind::Shape, "concat: branch output must be rank-1, got " + shape_to_string(s));
    total += s[0];
  }
  return {total};
}

Tensor Concat::forward(const Tensor& x, Mode mode, Rng& rng) {
  std::vector<double> merged;
  widths_.clear();
  for (auto& branch : branches_) {
    Tensor h = x;
    for (auto& layer : branch) h = layer->forward(h, mode, rng);
    if (h.rank() != 1) fail(ErrorKind::Shape, "concat: branch output must be rank-1, got " + shape_to_string(h.shape()));
    widths_.push_back(h.size());
    merged.insert(merged.end(), h.values().begin(), h.values().end());
  }
  const std::size_t n = merged.size();
  return Tensor({n}, std::move(merged));
}

Tensor Concat::backward(const Tensor& grad_out, bool need_input_grad) {
  Tensor grad_in;
  std::size_t offset = 0;
  for (std::size_t b = 0; b < branches_.size(); ++b) {
    auto& branch = branches_[b];
    std::vector<double> slice(grad_out.values().begin() + static_cast<std::ptrdiff_t>(offset),
                              grad_out.values().begin() + static_cast<std::ptrdiff_t>(offset + widths_[b]));
    offset += widths_[b];
    Tensor g({widths_[b]}, std::move(slice));
    for (std::size_t i = branch.size(); i-- > 0;) {
      g = branch[i]->backward(g, need_input_grad || i > 0);
    }
    if (!need_input_grad) continue;
    if (grad_in.empty()) {
      grad_in = std::move(g);
    } else {
      for (std::size_t i = 0; i < grad_in.size(); ++i) grad_in[i] += g[i];
    }
  }
  return grad_in;
}

std::vector<Parameter*> Concat::parameters() {
  std::vector<Parameter*> out;
  for (auto& branch : branches_) {
    for (auto& layer : branch) {
      for (Parameter* p : layer->parameters()) out.push_back(p);
    }
  }
  return out;
}

void Concat::initialize(Rng& rng) {
  for (auto& branch : branches_) {
    for (auto& layer : branch) layer->initialize(rng);
  }
}

nlohmann::ordered_json Concat::describe() const {
  auto j = Layer::describe();
  j["branches"] = nlohmann::ordered_json::array();
  for (const auto& branch : branches_) {
    auto layers = nlohmann::ordered_json::array();
    for (const auto& layer : branch) layers.push_back(layer->describe());
    j["branches"].push_back(std::move(layers));
  }
  return j;
}

// ---------------------------------------------------------------------------
// Network

Network::Network(Shape input_shape, LayerStack layers) : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
  Shape s = input_shape_;
  for (const auto& layer : layers_) s = layer->output_shape(s);
  output_shape_ = s;
}

Network::Network(const Network& other) : input_shape_(other.input_shape_), output_shape_(other.output_shape_) {
  for (const auto& layer : other.layers_) layers_.push_back(layer->clone());
}

Network& Network::operator=(const Network& other) {
  if (this != &other) *this = Network(other);
  return *this;
}

void Network::initialize(std::uint64_t seed) {
  Rng rng(seed);
  for (auto& layer : layers_) layer->initialize(rng);
}

Tensor Network::forward(const Tensor& x, Mode mode, Rng& rng) {
  if (x.shape() != input_shape_) {
    fail(ErrorKind::Shape, "network: expected input " + shape_to_string(input_shape_) + ", got " + shape_to_string(x.shape()));
  }
  Tensor h = x;
  for (auto& layer : layers_) h = layer->forward(h, mode, rng);
  return h;
}

Tensor Network::predict(const Tensor& x) {
  Rng unused(0);
  return forward(x, Mode::Infer, unused);
}

Tensor Network::backward(const Tensor& grad_out, bool need_input_grad) {
  Tensor g = grad_out;
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g, need_input_grad || i > 0);
  }
  return g;
}

std::vector<Parameter*> Network::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (Parameter* p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::size_t Network::count_params() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) n += layer->parameter_count();
  return n;
}

void Network::zero_grad() {
  for (Parameter* p : parameters()) p->grad.fill(0.0);
}

std::vector<Tensor> Network::weights() const {
  std::vector<Tensor> out;
  for (Parameter* p : const_cast<Network*>(this)->parameters()) out.push_back(p->value);
  return out;
}

void Network::set_weights(const std::vector<Tensor>& weights) {
  const auto params = parameters();
  if (weights.size() != params.size()) {
    fail(ErrorKind::Shape, "network: expected " + std::to_string(params.size()) + " weight arrays, got " +
                               std::to_string(weights.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (weights[i].shape() != params[i]->value.shape()) {
      fail(ErrorKind::Shape, "network: weight array " + std::to_string(i) + " has shape " +
                                 shape_to_string(weights[i].shape()) + ", expected " +
                                 shape_to_string(params[i]->value.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = weights[i];
}

nlohmann::ordered_json Network::summary() const {
  nlohmann::ordered_json layers = nlohmann::ordered_json::array();
  Shape s = input_shape_;
  for (const auto& layer : layers_) {
    s = layer->output_shape(s);
    auto j = layer->describe();
    j["output"] = s;
    j["params"] = const_cast<Layer&>(*layer).parameter_count();
    layers.push_back(std::move(j));
  }
  nlohmann::ordered_json out;
  out["input"] = input_shape_;
  out["layers"] = std::move(layers);
  out["params"] = count_params();
  return out;
}

LossAndGradients compute_gradients(Network& net, std::span<const Tensor* const> batch, std::span<const int> labels,
                                   Mode mode, Rng& rng) {
  if (batch.size() != labels.size() || batch.empty()) {
    fail(ErrorKind::Shape, "compute_gradients: batch and labels must be non-empty and of equal length");
  }
  net.zero_grad();
  LossAndGradients result;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Tensor probs = net.forward(*batch[i], mode, rng);
    const double p = probs[kSrIndex];
    const int y = labels[i];
    result.loss += bce_loss(p, y) * scale;
    if ((p >= 0.5) == (y == 1)) ++result.correct;
    Tensor grad(probs.shape());
    grad[kSrIndex] = bce_gradient(p, y) * scale;
    net.backward(grad);
  }
  for (Parameter* p : net.parameters()) result.gradients.grads.push_back(p->grad);
  return result;
}

// ---------------------------------------------------------------------------
// Optimizers

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::SGD ? "sgd" : "adam"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::SGD;
  if (name == "adam") return OptimizerKind::Adam;
  fail(ErrorKind::Usage, "unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

void Optimizer::step(const std::vector<Parameter*>& params) {
  for (const Parameter* p : params) {
    if (!p->grad.all_finite()) fail(ErrorKind::Numeric, "optimizer: non-finite gradient in parameter '" + p->name + "'");
  }
  ++t_;
  const double lr = config_.learning_rate;
  if (config_.kind == OptimizerKind::SGD) {
    for (Parameter* p : params) {
      for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
    }
    return;
  }
  if (m_.size() != params.size()) {
    m_.clear();
    v_.clear();
    for (const Parameter* p : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    double* m = m_[k].data();
    double* v = v_[k].data();
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = b1 * m[i] + (1.0 - b1) * g;
      v[i] = b2 * v[i] + (1.0 - b2) * g * g;
      p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
}

}  // namespace srn
