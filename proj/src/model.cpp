#include "eraclass/model.hpp"

#include <cmath>
#include <cstring>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "eraclass/error.hpp"
#include "eraclass/hash.hpp"

namespace eraclass {

using nlohmann::json;

namespace {

constexpr std::size_t kPredictChunk = 256;

const DenseSpec* output_dense(const ModelSpec& spec) {
  if (spec.layers.empty()) return nullptr;
  return std::get_if<DenseSpec>(&spec.layers.back());
}

double accuracy_of(const Tensor& probs, std::span<const std::size_t> y) {
  if (y.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < y.size(); ++r) hits += predicted_class(probs, r) == y[r];
  return static_cast<double>(hits) / static_cast<double>(y.size());
}

}  // namespace

std::size_t ModelSpec::num_classes() const {
  const DenseSpec* out = output_dense(*this);
  if (!out) return 0;
  return out->units == 1 ? 2 : out->units;
}

bool ModelSpec::sequence_input() const {
  return !layers.empty() && std::holds_alternative<EmbeddingSpec>(layers.front());
}

void ModelSpec::validate() const {
  const DenseSpec* out = output_dense(*this);
  if (!out) throw ConfigError("model must end with a dense output layer");
  if (loss == LossKind::binary_ce) {
    if (out->units != 1 || out->activation != Activation::sigmoid) {
      throw ConfigError("binary_ce needs a single sigmoid output unit");
    }
  } else if (out->units < 2 || out->activation != Activation::softmax) {
    throw ConfigError("sparse_categorical_ce needs a softmax output with one unit per class (>= 2)");
  }
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  optimizer.validate();
  LayerShape shape{1, false, sequence_input()};
  for (const auto& l : layers) shape = infer_shape(l, shape);
}

json to_json(const ModelSpec& spec) {
  json layers = json::array();
  for (const auto& l : spec.layers) layers.push_back(to_json(l));
  return {{"layers", layers},
          {"loss", to_string(spec.loss)},
          {"optimizer",
           {{"kind", to_string(spec.optimizer.kind)},
            {"learning_rate", spec.optimizer.learning_rate},
            {"rho", spec.optimizer.rho},
            {"beta1", spec.optimizer.beta1},
            {"beta2", spec.optimizer.beta2},
            {"epsilon", spec.optimizer.epsilon}}},
          {"batch_size", spec.batch_size},
          {"epochs", spec.epochs},
          {"seed", spec.seed},
          {"patience", spec.patience}};
}

ModelSpec model_spec_from_json(const json& j) {
  ModelSpec spec;
  for (const auto& l : j.at("layers")) spec.layers.push_back(layer_spec_from_json(l));
  spec.loss = parse_loss(j.at("loss").get<std::string>());
  if (j.contains("optimizer")) {
    const json& o = j.at("optimizer");
    spec.optimizer.kind = parse_optimizer(o.value("kind", "rmsprop"));
    spec.optimizer.learning_rate = o.value("learning_rate", spec.optimizer.learning_rate);
    spec.optimizer.rho = o.value("rho", spec.optimizer.rho);
    spec.optimizer.beta1 = o.value("beta1", spec.optimizer.beta1);
    spec.optimizer.beta2 = o.value("beta2", spec.optimizer.beta2);
    spec.optimizer.epsilon = o.value("epsilon", spec.optimizer.epsilon);
  }
  spec.batch_size = j.value("batch_size", spec.batch_size);
  spec.epochs = j.value("epochs", spec.epochs);
  spec.seed = j.value("seed", spec.seed);
  spec.patience = j.value("patience", spec.patience);
  return spec;
}

DenseSpec output_layer(std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("need at least two classes");
  if (num_classes == 2) return {1, Activation::sigmoid};
  return {num_classes, Activation::softmax};
}

LossKind loss_for(std::size_t num_classes) {
  return num_classes == 2 ? LossKind::binary_ce : LossKind::sparse_categorical_ce;
}

ModelSpec ann_spec(std::size_t num_classes, const AnnOptions& opt) {
  ModelSpec spec;
  for (std::size_t i = 0; i < opt.hidden_blocks; ++i) {
    spec.layers.emplace_back(DenseSpec{opt.units, Activation::relu});
    if (opt.dropout > 0.0) spec.layers.emplace_back(DropoutSpec{opt.dropout});
  }
  spec.layers.emplace_back(output_layer(num_classes));
  spec.loss = loss_for(num_classes);
  spec.optimizer.kind = OptimizerKind::rmsprop;
  spec.batch_size = 512;
  spec.epochs = 10;
  return spec;
}

ModelSpec rnn_spec(std::size_t num_classes, std::size_t input_dim, const RnnOptions& opt) {
  if (opt.recurrent_layers == 0) throw ConfigError("rnn needs at least one recurrent layer");
  ModelSpec spec;
  spec.layers.emplace_back(EmbeddingSpec{input_dim, opt.embedding_dim, true});
  for (std::size_t i = 0; i < opt.recurrent_layers; ++i) {
    const bool last = i + 1 == opt.recurrent_layers;
    spec.layers.emplace_back(RecurrentSpec{opt.cell, opt.units, opt.bidirectional, !last});
  }
  if (opt.dropout > 0.0) spec.layers.emplace_back(DropoutSpec{opt.dropout});
  for (std::size_t w : opt.dense_widths) spec.layers.emplace_back(DenseSpec{w, Activation::relu});
  spec.layers.emplace_back(output_layer(num_classes));
  spec.loss = loss_for(num_classes);
  spec.optimizer.kind = OptimizerKind::rmsprop;
  spec.batch_size = 128;
  spec.epochs = 10;
  return spec;
}

json to_json(const TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    epochs.push_back({{"epoch", e.epoch},
                      {"train_loss", e.train_loss},
                      {"train_accuracy", e.train_accuracy},
                      {"val_loss", e.val_loss},
                      {"val_accuracy", e.val_accuracy}});
  }
  return {{"epochs", epochs},
          {"best_epoch", h.best_epoch},
          {"best_val_accuracy", h.best_val_accuracy},
          {"stopped_early", h.stopped_early}};
}

Tensor rows_tensor(const FeatureMatrix& x, std::size_t begin, std::size_t end) {
  Tensor t({end - begin, x.cols});
  std::copy(x.values.begin() + static_cast<std::ptrdiff_t>(begin * x.cols),
            x.values.begin() + static_cast<std::ptrdiff_t>(end * x.cols), t.raw());
  return t;
}

Tensor rows_tensor(const FeatureMatrix& x, std::span<const std::size_t> rows) {
  Tensor t({rows.size(), x.cols});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    std::copy_n(x.values.data() + rows[i] * x.cols, x.cols, t.raw() + i * x.cols);
  }
  return t;
}

Model::Model(ModelSpec spec, std::size_t input_width) : spec_(std::move(spec)), input_width_(input_width) {
  spec_.validate();
  if (input_width_ == 0) throw ConfigError("model input width must be positive");
  Rng rng(Rng::mix(spec_.seed, 0));
  LayerShape shape{input_width_, false, spec_.sequence_input()};
  for (const auto& l : spec_.layers) {
    layers_.push_back(make_layer(l, shape, rng));
    shape = infer_shape(l, shape);
  }
  // The output activation is applied here so training can use the fused
  // cross-entropy gradient with respect to the logits.
  auto* out = dynamic_cast<DenseLayer*>(layers_.back().get());
  head_ = std::get<DenseSpec>(spec_.layers.back()).activation;
  out->set_activation(Activation::identity);
}

Model::Model(Model&&) noexcept = default;
Model& Model::operator=(Model&&) noexcept = default;
Model::~Model() = default;

Tensor Model::run(const Tensor& x, bool training, Rng* rng,
                  std::vector<std::unique_ptr<LayerCache>>* caches) const {
  if (x.rank() != 2 || x.dim(1) != input_width_) {
    throw std::invalid_argument("model: expected input [batch, " + std::to_string(input_width_) + "], got " +
                                x.shape_string());
  }
  ForwardState state;
  state.training = training;
  state.rng = rng;
  if (caches) caches->resize(layers_.size());
  Tensor h = x;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    h = layers_[i]->forward(h, state, caches ? &(*caches)[i] : nullptr);
  }
  apply_activation(h, head_);
  return h;
}

Tensor Model::forward(const Tensor& x) const { return run(x, false, nullptr, nullptr); }

Tensor Model::predict_proba(const FeatureMatrix& x) const {
  if (x.cols != input_width_) {
    throw std::invalid_argument("model: feature width " + std::to_string(x.cols) + " does not match input width " +
                                std::to_string(input_width_));
  }
  const std::size_t outputs = std::get<DenseSpec>(spec_.layers.back()).units;
  Tensor out({x.rows, outputs});
  for (std::size_t begin = 0; begin < x.rows; begin += kPredictChunk) {
    const std::size_t end = std::min(x.rows, begin + kPredictChunk);
    const Tensor p = forward(rows_tensor(x, begin, end));
    std::copy(p.raw(), p.raw() + p.size(), out.raw() + begin * outputs);
  }
  return out;
}

std::vector<std::size_t> Model::predict(const FeatureMatrix& x) const {
  const Tensor p = predict_proba(x);
  std::vector<std::size_t> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = predicted_class(p, r);
  return out;
}

double Model::evaluate_loss(const FeatureMatrix& x, std::span<const std::size_t> y) const {
  return loss(predict_proba(x), y, spec_.loss);
}

double Model::loss_and_gradients(const Tensor& x, std::span<const std::size_t> y, bool training, Rng* rng) {
  for (auto& l : layers_) l->zero_grad();
  std::vector<std::unique_ptr<LayerCache>> caches;
  const Tensor probs = run(x, training, rng, &caches);
  const double value = loss(probs, y, spec_.loss);
  Tensor g = loss_grad_logits(probs, y, spec_.loss);
  for (std::size_t i = layers_.size(); i-- > 0;) {
    g = layers_[i]->backward(g, *caches[i]);
  }
  return value;
}

TrainHistory Model::fit(const FeatureMatrix& x, std::span<const std::size_t> y, const FeatureMatrix& val_x,
                        std::span<const std::size_t> val_y) {
  if (x.rows != y.size() || val_x.rows != val_y.size()) {
    throw std::invalid_argument("fit: feature rows do not match labels");
  }
  if (x.rows == 0) throw DataError("fit: empty training set");
  TrainHistory history;
  Optimizer opt(spec_.optimizer);
  Rng rng(Rng::mix(spec_.seed, 1));
  const bool has_val = val_x.rows > 0;
  auto best = snapshot();
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  std::vector<std::size_t> order(x.rows);

  for (std::size_t epoch = 1; epoch <= spec_.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t begin = 0; begin < x.rows; begin += spec_.batch_size) {
      const std::size_t end = std::min(x.rows, begin + spec_.batch_size);
      const std::span<const std::size_t> idx(order.data() + begin, end - begin);
      const Tensor xb = rows_tensor(x, idx);
      std::vector<std::size_t> yb(idx.size());
      for (std::size_t i = 0; i < idx.size(); ++i) yb[i] = y[idx[i]];

      for (auto& l : layers_) l->zero_grad();
      std::vector<std::unique_ptr<LayerCache>> caches;
      const Tensor probs = run(xb, true, &rng, &caches);
      const double batch_loss = loss(probs, yb, spec_.loss);
      if (!std::isfinite(batch_loss) || !probs.all_finite()) {
        throw NumericError("non-finite loss in epoch " + std::to_string(epoch) + " at batch starting " +
                           std::to_string(begin));
      }
      loss_sum += batch_loss * static_cast<double>(yb.size());
      for (std::size_t r = 0; r < yb.size(); ++r) hits += predicted_class(probs, r) == yb[r];
      Tensor g = loss_grad_logits(probs, yb, spec_.loss);
      for (std::size_t i = layers_.size(); i-- > 0;) g = layers_[i]->backward(g, *caches[i]);
      opt.step(parameters());
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(x.rows);
    rec.train_accuracy = static_cast<double>(hits) / static_cast<double>(x.rows);
    if (has_val) {
      const Tensor p = predict_proba(val_x);
      rec.val_loss = loss(p, val_y, spec_.loss);
      rec.val_accuracy = accuracy_of(p, val_y);
      if (!std::isfinite(rec.val_loss)) throw NumericError("non-finite validation loss in epoch " + std::to_string(epoch));
    }
    history.epochs.push_back(rec);

    // Ties in accuracy go to the lower loss.
    const double score = has_val ? rec.val_accuracy : rec.train_accuracy;
    const double score_loss = has_val ? rec.val_loss : rec.train_loss;
    if (score > best_acc || (score == best_acc && score_loss < best_loss)) {
      best_acc = score;
      best_loss = score_loss;
      best = snapshot();
      history.best_epoch = epoch;
      history.best_val_accuracy = score;
      since_best = 0;
    } else if (spec_.patience > 0 && ++since_best >= spec_.patience) {
      history.stopped_early = true;
      break;
    }
  }
  restore(best);
  return history;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& l : layers_) {
    for (auto* p : l->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<std::string> Model::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    for (const auto& n : layers_[i]->parameter_names()) out.push_back("layer" + std::to_string(i) + "/" + n);
  }
  return out;
}

std::vector<Layer*> Model::layers() {
  std::vector<Layer*> out;
  for (auto& l : layers_) out.push_back(l.get());
  return out;
}

std::vector<std::vector<double>> Model::snapshot() const {
  std::vector<std::vector<double>> snap;
  for (const auto& l : layers_) {
    for (auto* p : const_cast<Layer&>(*l).parameters()) snap.push_back(p->value.storage());
  }
  return snap;
}

void Model::restore(const std::vector<std::vector<double>>& snap) {
  std::size_t i = 0;
  for (auto* p : parameters()) p->value.storage() = snap.at(i++);
}

std::uint64_t Model::weights_hash() const {
  std::uint64_t h = fnv1a64({});
  for (const auto& w : snapshot()) {
    h = fnv1a64(std::string_view(reinterpret_cast<const char*>(w.data()), w.size() * sizeof(double)), h);
  }
  return h;
}

Checkpoint to_checkpoint(Model& model, json meta) {
  Checkpoint ckpt;
  ckpt.kind = "neural";
  ckpt.spec = to_json(model.spec());
  meta["input_width"] = model.input_width();
  ckpt.meta = std::move(meta);
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) ckpt.tensors.emplace_back(names[i], params[i]->value);
  return ckpt;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "neural") throw DataError("checkpoint kind '" + ckpt.kind + "' is not a neural model");
  Model model(model_spec_from_json(ckpt.spec), ckpt.meta.at("input_width").get<std::size_t>());
  const auto names = model.parameter_names();
  const auto params = model.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Tensor& t = ckpt.tensor(names[i]);
    if (t.shape() != params[i]->value.shape()) {
      throw DataError("checkpoint tensor '" + names[i] + "' has shape " + t.shape_string() + ", expected " +
                      params[i]->value.shape_string());
    }
    params[i]->value = t;
  }
  return model;
}

}  // namespace eraclass
