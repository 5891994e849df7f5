#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "securereqnet/random.hpp"
#include "securereqnet/tensor.hpp"

// Minimal layer engine for n-gram text CNNs.
//
// Activations are rank-2 [positions, width] while convolving and rank-1
// after pooling or flattening. A convolution kernel always spans the full
// input width, so an n-gram kernel over a [L, d] document matrix yields a
// [L - n + 1, filters] output whose column f is filter f's feature map.
// Everything runs in double precision, one sample at a time.
namespace srn {

enum class Mode { Train, Infer };

enum class LayerKind { Conv, GlobalMaxPool, MaxPool, Flatten, Dense, ReLU, Dropout, Softmax, Concat };

std::string_view to_string(LayerKind kind);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  /// Throws ErrorKind::Shape when the input shape is not accepted.
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor forward(const Tensor& x, Mode mode, Rng& rng) = 0;
  /// Accumulates parameter gradients and returns d loss / d input (empty when
  /// `need_input_grad` is false). Uses state cached by the last forward.
  virtual Tensor backward(const Tensor& grad_out, bool need_input_grad) = 0;
  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::unique_ptr<Layer> clone() const = 0;
  virtual void initialize(Rng& /*rng*/) {}
  /// Kind-specific settings for summaries.
  virtual nlohmann::ordered_json describe() const;

  std::size_t parameter_count();
};

using LayerStack = std::vector<std::unique_ptr<Layer>>;

/// Full-width n-gram convolution, stride 1, no padding.
class Conv final : public Layer {
 public:
  Conv(std::size_t ngram, std::size_t input_width, std::size_t filters);

  LayerKind kind() const override { return LayerKind::Conv; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::vector<Parameter*> parameters() override { return {&kernels_, &bias_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Conv>(*this); }
  void initialize(Rng& rng) override;
  nlohmann::ordered_json describe() const override;

  std::size_t ngram() const { return ngram_; }
  std::size_t filters() const { return filters_; }
  Parameter& kernels() { return kernels_; }  // [filters, ngram * input_width]
  Parameter& bias() { return bias_; }        // [filters]

 private:
  std::size_t ngram_;
  std::size_t width_;
  std::size_t filters_;
  Parameter kernels_;
  Parameter bias_;
  Tensor input_;
};

/// Non-global max pooling along the position axis.
class MaxPool final : public Layer {
 public:
  MaxPool(std::size_t window = 2, std::size_t stride = 2);

  LayerKind kind() const override { return LayerKind::MaxPool; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<MaxPool>(*this); }
  nlohmann::ordered_json describe() const override;

 private:
  std::size_t window_;
  std::size_t stride_;
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// [positions, filters] -> [filters]: each feature map reduced to its maximum.
class GlobalMaxPool final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::GlobalMaxPool; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<GlobalMaxPool>(*this); }

 private:
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

class Flatten final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Flatten; }
  Shape output_shape(const Shape& input) const override { return {shape_size(input)}; }
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Flatten>(*this); }

 private:
  Shape input_shape_;
};

class Dense final : public Layer {
 public:
  Dense(std::size_t inputs, std::size_t outputs);

  LayerKind kind() const override { return LayerKind::Dense; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::vector<Parameter*> parameters() override { return {&weights_, &bias_}; }
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dense>(*this); }
  void initialize(Rng& rng) override;
  nlohmann::ordered_json describe() const override;

  Parameter& weights() { return weights_; }  // [outputs, inputs]
  Parameter& bias() { return bias_; }        // [outputs]

 private:
  std::size_t inputs_;
  std::size_t outputs_;
  Parameter weights_;
  Parameter bias_;
  Tensor input_;
};

class ReLU final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::ReLU; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<ReLU>(*this); }

 private:
  Tensor input_;
};

/// Inverted dropout: identity at inference.
class Dropout final : public Layer {
 public:
  explicit Dropout(double rate);

  LayerKind kind() const override { return LayerKind::Dropout; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Dropout>(*this); }
  nlohmann::ordered_json describe() const override;

  double rate() const { return rate_; }

 private:
  double rate_;
  std::vector<double> scale_;  // per-entry multiplier of the last forward
};

class Softmax final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::Softmax; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Softmax>(*this); }

 private:
  Tensor output_;
};

/// Runs parallel branches on the same input and concatenates their rank-1
/// outputs in branch order.
class Concat final : public Layer {
 public:
  explicit Concat(std::vector<LayerStack> branches);
  Concat(const Concat& other);

  LayerKind kind() const override { return LayerKind::Concat; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) override;
  Tensor backward(const Tensor& grad_out, bool need_input_grad) override;
  std::vector<Parameter*> parameters() override;
  std::unique_ptr<Layer> clone() const override { return std::make_unique<Concat>(*this); }
  void initialize(Rng& rng) override;
  nlohmann::ordered_json describe() const override;

  const std::vector<LayerStack>& branches() const { return branches_; }

 private:
  std::vector<LayerStack> branches_;
  std::vector<std::size_t> widths_;
};

// Free-standing forms of the layer computations.

/// input [L, W], kernels [F, n * W], bias [F] -> [L - n + 1, F].
Tensor conv_forward(const Tensor& input, const Tensor& kernels, const Tensor& bias);
double global_max_pool(std::span<const double> feature_map);
/// W [q, p], b [q], x [p] -> W x + b.
Tensor dense_forward(const Tensor& x, const Tensor& weights, const Tensor& bias);
std::vector<double> softmax(std::span<const double> z);
Tensor dropout(const Tensor& x, double rate, Mode mode, Rng& rng);

constexpr double kBceEpsilon = 1e-12;
/// Binary cross-entropy of the SR probability `p` against y in {0, 1}; p is
/// clamped to [eps, 1 - eps].
double bce_loss(double p, int y);
/// d bce / d p, evaluated at the clamped probability.
double bce_gradient(double p, int y);

/// Index of the SR class in every network's softmax output.
constexpr std::size_t kSrIndex = 1;

class Network {
 public:
  Network(Shape input_shape, LayerStack layers);
  Network(const Network& other);
  Network& operator=(const Network& other);
  Network(Network&&) noexcept = default;
  Network& operator=(Network&&) noexcept = default;

  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return output_shape_; }
  const LayerStack& layers() const { return layers_; }

  /// Fresh random weights (Glorot-uniform kernels, zero biases).
  void initialize(std::uint64_t seed);

  Tensor forward(const Tensor& x, Mode mode, Rng& rng);
  /// Inference-mode forward.
  Tensor predict(const Tensor& x);
  Tensor backward(const Tensor& grad_out, bool need_input_grad = false);

  std::vector<Parameter*> parameters();
  std::size_t count_params() const;
  void zero_grad();

  std::vector<Tensor> weights() const;
  void set_weights(const std::vector<Tensor>& weights);

  /// Layer-by-layer description with output shapes and parameter counts.
  nlohmann::ordered_json summary() const;

 private:
  Shape input_shape_;
  Shape output_shape_;
  LayerStack layers_;
};

/// Per-parameter gradients in `Network::parameters()` order.
struct GradientSet {
  std::vector<Tensor> grads;
};

struct LossAndGradients {
  double loss = 0.0;
  std::size_t correct = 0;  // predictions on the SR/NonSR side of 0.5 matching labels
  GradientSet gradients;
};

/// Mean BCE over the batch and its exact gradients with respect to every
/// parameter. Dropout masks drawn in forward are reused in backward.
LossAndGradients compute_gradients(Network& net, std::span<const Tensor* const> batch, std::span<const int> labels,
                                   Mode mode, Rng& rng);

enum class OptimizerKind { SGD, Adam };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

std::string_view to_string(OptimizerKind kind);
OptimizerKind parse_optimizer(std::string_view name);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config) : config_(config) {}

  /// Applies one update from the gradients stored in `params`. Throws
  /// ErrorKind::Numeric on a non-finite gradient before touching any weight.
  void step(const std::vector<Parameter*>& params);

  const OptimizerConfig& config() const { return config_; }
  void set_learning_rate(double lr) { config_.learning_rate = lr; }
  std::uint64_t steps() const { return t_; }

 private:
  OptimizerConfig config_;
  std::uint64_t t_ = 0;
  std::vector<Tensor> m_;
  std::vector<Tensor> v_;
};

}  // namespace srn
