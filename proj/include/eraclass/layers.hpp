#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "eraclass/activations.hpp"
#include "eraclass/optimizer.hpp"
#include "eraclass/rng.hpp"
#include "eraclass/tensor.hpp"
#include "json.hpp"

namespace eraclass {

struct DenseSpec {
  std::size_t units = 0;
  Activation activation = Activation::identity;
};

struct DropoutSpec {
  double rate = 0.0;
};

struct EmbeddingSpec {
  std::size_t input_dim = 0;  // vocabulary size + 2 (PAD and OOV)
  std::size_t output_dim = 64;
  bool mask_zero = true;
};

enum class CellType { lstm, gru };

struct RecurrentSpec {
  CellType cell = CellType::gru;
  std::size_t units = 32;
  bool bidirectional = false;
  bool return_sequences = false;
};

struct Conv1DSpec {
  std::size_t filters = 128;
  std::size_t kernel_width = 5;
  Activation activation = Activation::relu;
};

struct GlobalMaxPoolSpec {};

using LayerSpec = std::variant<DenseSpec, DropoutSpec, EmbeddingSpec, RecurrentSpec, Conv1DSpec, GlobalMaxPoolSpec>;

nlohmann::json to_json(const LayerSpec& spec);
LayerSpec layer_spec_from_json(const nlohmann::json& j);

// 1 = real timestep, 0 = padding; laid out [batch * steps].
using Mask = std::vector<std::uint8_t>;

struct ForwardState {
  bool training = false;
  Rng* rng = nullptr;  // required by dropout in training mode
  std::optional<Mask> mask;
};

struct LayerCache {
  virtual ~LayerCache() = default;
};

/// A differentiable layer. forward() is const so a trained model can serve
/// concurrent inference; everything backward() needs is returned through the
/// optional cache.
class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerSpec spec() const = 0;
  virtual Tensor forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const = 0;
  // Adds parameter gradients and returns d(loss)/d(input). Index inputs
  // (embedding) return an empty tensor.
  virtual Tensor backward(const Tensor& grad_out, const LayerCache& cache) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<std::string> parameter_names() const { return {}; }

  void zero_grad();
};

// Fills `p` from U(-limit, limit), limit = sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor& p, std::size_t fan_in, std::size_t fan_out, Rng& rng);

/// y = activation(x W + b); x is [batch, in], W is [in, units].
class DenseLayer : public Layer {
 public:
  DenseLayer(DenseSpec spec, std::size_t in_features, Rng& rng);

  LayerSpec spec() const override { return spec_; }
  Tensor forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const override;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) override;
  std::vector<Parameter*> parameters() override { return {&weight_, &bias_}; }
  std::vector<std::string> parameter_names() const override { return {"kernel", "bias"}; }

  Parameter& weight() { return weight_; }
  Parameter& bias() { return bias_; }
  void set_activation(Activation a) { spec_.activation = a; }

 private:
  DenseSpec spec_;
  std::size_t in_ = 0;
  Parameter weight_;
  Parameter bias_;
};

/// Inverted dropout: in training each unit is zeroed with probability
/// `rate` and survivors are scaled by 1 / (1 - rate). Identity at inference.
class DropoutLayer : public Layer {
 public:
  explicit DropoutLayer(DropoutSpec spec);

  LayerSpec spec() const override { return spec_; }
  Tensor forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const override;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) override;

 private:
  DropoutSpec spec_;
};

/// Index lookup: [batch, steps] indices (stored as doubles) to
/// [batch, steps, dim]. With mask_zero, index 0 marks padding and the mask is
/// handed to the following layers.
class EmbeddingLayer : public Layer {
 public:
  EmbeddingLayer(EmbeddingSpec spec, Rng& rng);

  LayerSpec spec() const override { return spec_; }
  Tensor forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const override;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) override;
  std::vector<Parameter*> parameters() override { return {&table_}; }
  std::vector<std::string> parameter_names() const override { return {"embeddings"}; }

  Parameter& table() { return table_; }

 private:
  EmbeddingSpec spec_;
  Parameter table_;
};

/// LSTM or GRU over [batch, steps, in], optionally bidirectional.
///
/// GRU (gate order z, r, candidate in W, U and b):
///   z  = sigmoid(x Wz + h Uz + bz)
///   r  = sigmoid(x Wr + h Ur + br)
///   h~ = tanh(x Wh + (r * h) Uh + bh)
///   h' = z * h + (1 - z) * h~
/// LSTM (gate order i, f, g, o):
///   i = sigmoid(.), f = sigmoid(.), g = tanh(.), o = sigmoid(.)
///   c' = f * c + i * g;  h' = o * tanh(c')
/// where each (.) is x W_k + h U_k + b_k. States start at zero.
///
/// Masked steps leave the state untouched and emit zeros, so the final state
/// is the state after the last real step and an all-padding row stays zero.
/// The backward direction walks the steps in reverse; its final state is
/// concatenated after the forward one.
class RecurrentLayer : public Layer {
 public:
  RecurrentLayer(RecurrentSpec spec, std::size_t in_features, Rng& rng);

  LayerSpec spec() const override { return spec_; }
  Tensor forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const override;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) override;
  std::vector<Parameter*> parameters() override;
  std::vector<std::string> parameter_names() const override;

  std::size_t gates() const { return spec_.cell == CellType::gru ? 3 : 4; }
  std::size_t output_features() const { return spec_.units * (spec_.bidirectional ? 2 : 1); }

  struct Direction {
    Parameter kernel;     // [in, gates * units]
    Parameter recurrent;  // [units, gates * units]
    Parameter bias;       // [gates * units]
  };
  Direction& direction(std::size_t d) { return dirs_.at(d); }

 private:
  RecurrentSpec spec_;
  std::size_t in_ = 0;
  std::vector<Direction> dirs_;
};

/// Valid (unpadded) 1-D cross-correlation over time followed by the
/// activation: [batch, steps, in] to [batch, steps - k + 1, filters].
class Conv1DLayer : public Layer {
 public:
  Conv1DLayer(Conv1DSpec spec, std::size_t in_features, Rng& rng);

  LayerSpec spec() const override { return spec_; }
  Tensor forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const override;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) override;
  std::vector<Parameter*> parameters() override { return {&kernel_, &bias_}; }
  std::vector<std::string> parameter_names() const override { return {"kernel", "bias"}; }

  Parameter& kernel() { return kernel_; }  // [k, in, filters]
  Parameter& bias() { return bias_; }

 private:
  Conv1DSpec spec_;
  std::size_t in_ = 0;
  Parameter kernel_;
  Parameter bias_;
};

// Per-feature maximum over time: [batch, steps, F] to [batch, F].
class GlobalMaxPoolLayer : public Layer {
 public:
  LayerSpec spec() const override { return GlobalMaxPoolSpec{}; }
  Tensor forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const override;
  Tensor backward(const Tensor& grad_out, const LayerCache& cache) override;
};

// Feature width flowing between layers; `sequence` marks [batch, steps, F].
struct LayerShape {
  std::size_t features = 0;
  bool sequence = false;
  bool indices = false;  // raw token indices, only valid as embedding input
};

// Checks that `spec` accepts `in` and returns its output shape; throws
// ConfigError otherwise.
LayerShape infer_shape(const LayerSpec& spec, const LayerShape& in);

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const LayerShape& in, Rng& rng);

}  // namespace eraclass
