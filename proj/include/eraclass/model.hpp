#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eraclass/checkpoint.hpp"
#include "eraclass/features.hpp"
#include "eraclass/layers.hpp"
#include "eraclass/loss.hpp"
#include "eraclass/optimizer.hpp"
#include "json.hpp"

namespace eraclass {

/// Layer stack plus training hyperparameters. The last layer is the output
/// Dense: 1 sigmoid unit with binary_ce, or one softmax unit per class with
/// sparse_categorical_ce.
struct ModelSpec {
  std::vector<LayerSpec> layers;
  LossKind loss = LossKind::sparse_categorical_ce;
  OptimizerSpec optimizer;
  std::size_t batch_size = 512;
  std::size_t epochs = 10;
  std::uint64_t seed = 0;
  // Stop after this many epochs without a new best snapshot; 0 runs
  // every epoch. The best snapshot is restored either way.
  std::size_t patience = 0;

  std::size_t num_classes() const;
  bool sequence_input() const;
  // Throws ConfigError on an unusable stack or hyperparameters.
  void validate() const;
};

nlohmann::json to_json(const ModelSpec& spec);
ModelSpec model_spec_from_json(const nlohmann::json& j);

struct AnnOptions {
  std::size_t hidden_blocks = 1;
  std::size_t units = 32;
  double dropout = 0.7;
};

// Dense(units, relu) + Dropout blocks, then the output layer; RMSProp,
// batch 512, 10 epochs.
ModelSpec ann_spec(std::size_t num_classes, const AnnOptions& opt = {});

struct RnnOptions {
  std::size_t embedding_dim = 64;
  CellType cell = CellType::gru;
  std::size_t units = 32;
  std::size_t recurrent_layers = 2;
  bool bidirectional = true;
  double dropout = 0.7;
  std::vector<std::size_t> dense_widths;  // relu layers between dropout and output
};

// Embedding -> stacked (Bi)recurrent layers -> Dropout -> [Dense relu]* ->
// output; RMSProp, batch 128, 10 epochs. `input_dim` counts PAD and OOV.
ModelSpec rnn_spec(std::size_t num_classes, std::size_t input_dim, const RnnOptions& opt = {});

// Output layer spec for `num_classes` (sigmoid unit for two classes).
DenseSpec output_layer(std::size_t num_classes);
LossKind loss_for(std::size_t num_classes);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;  // 0 = initial weights kept
  double best_val_accuracy = 0.0;
  bool stopped_early = false;
};

nlohmann::json to_json(const TrainHistory& h);

/// A built layer stack. Inference (predict_proba, predict) is const and safe
/// to call from several threads; fit mutates weights and optimizer state.
class Model {
 public:
  Model(ModelSpec spec, std::size_t input_width);
  Model(Model&&) noexcept;
  Model& operator=(Model&&) noexcept;
  ~Model();

  const ModelSpec& spec() const { return spec_; }
  std::size_t input_width() const { return input_width_; }
  std::size_t num_classes() const { return spec_.num_classes(); }

  // Output probabilities for a [batch, input_width] input.
  Tensor forward(const Tensor& x) const;
  // [rows, outputs] probabilities, evaluated in chunks.
  Tensor predict_proba(const FeatureMatrix& x) const;
  std::vector<std::size_t> predict(const FeatureMatrix& x) const;

  // Trains on (x, y), selecting the epoch with the best validation accuracy
  // (training accuracy when `val` is empty; ties go to the lower loss).
  // Throws NumericError when a loss turns non-finite.
  TrainHistory fit(const FeatureMatrix& x, std::span<const std::size_t> y, const FeatureMatrix& val_x,
                   std::span<const std::size_t> val_y);

  // Mean loss on a labelled set at the current weights.
  double evaluate_loss(const FeatureMatrix& x, std::span<const std::size_t> y) const;

  // Loss and gradients of one batch at the current weights (gradients are
  // reset first). Dropout uses `rng` when `training` is true.
  double loss_and_gradients(const Tensor& x, std::span<const std::size_t> y, bool training, Rng* rng);

  std::vector<Parameter*> parameters();
  std::vector<std::string> parameter_names() const;
  std::vector<Layer*> layers();

  // FNV-1a over the raw bytes of every weight, in parameter order.
  std::uint64_t weights_hash() const;

 private:
  Tensor run(const Tensor& x, bool training, Rng* rng, std::vector<std::unique_ptr<LayerCache>>* caches) const;
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& snap);

  ModelSpec spec_;
  std::size_t input_width_ = 0;
  Activation head_ = Activation::identity;
  std::vector<std::unique_ptr<Layer>> layers_;
};

// Checkpoint of kind "neural"; `meta` is stored alongside input_width.
Checkpoint to_checkpoint(Model& model, nlohmann::json meta = nlohmann::json::object());
// Rebuilds the layer stack from the stored spec and loads every weight.
Model model_from_checkpoint(const Checkpoint& ckpt);

// Rows [begin, end) of `x` as a [end - begin, cols] tensor.
Tensor rows_tensor(const FeatureMatrix& x, std::size_t begin, std::size_t end);
Tensor rows_tensor(const FeatureMatrix& x, std::span<const std::size_t> rows);

}  // namespace eraclass
