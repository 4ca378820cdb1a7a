#include "eraclass/layers.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "eraclass/error.hpp"

namespace eraclass {

using nlohmann::json;

namespace {

std::string_view to_string(CellType c) { return c == CellType::gru ? "gru" : "lstm"; }

CellType parse_cell(std::string_view s) {
  if (s == "gru") return CellType::gru;
  if (s == "lstm") return CellType::lstm;
  throw ConfigError("unknown recurrent cell '" + std::string(s) + "'");
}

template <typename T>
const T& cache_as(const LayerCache& c) {
  const auto* p = dynamic_cast<const T*>(&c);
  if (!p) throw std::logic_error("layer cache type mismatch");
  return *p;
}

void require_rank(const Tensor& x, std::size_t rank, const char* layer) {
  if (x.rank() != rank) {
    throw std::invalid_argument(std::string(layer) + ": expected rank-" + std::to_string(rank) +
                                " input, got " + x.shape_string());
  }
}

}  // namespace

json to_json(const LayerSpec& spec) {
  return std::visit(
      [](const auto& s) -> json {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DenseSpec>) {
          return {{"type", "dense"}, {"units", s.units}, {"activation", to_string(s.activation)}};
        } else if constexpr (std::is_same_v<S, DropoutSpec>) {
          return {{"type", "dropout"}, {"rate", s.rate}};
        } else if constexpr (std::is_same_v<S, EmbeddingSpec>) {
          return {{"type", "embedding"},
                  {"input_dim", s.input_dim},
                  {"output_dim", s.output_dim},
                  {"mask_zero", s.mask_zero}};
        } else if constexpr (std::is_same_v<S, RecurrentSpec>) {
          return {{"type", "recurrent"},
                  {"cell", to_string(s.cell)},
                  {"units", s.units},
                  {"bidirectional", s.bidirectional},
                  {"return_sequences", s.return_sequences}};
        } else if constexpr (std::is_same_v<S, Conv1DSpec>) {
          return {{"type", "conv1d"},
                  {"filters", s.filters},
                  {"kernel_width", s.kernel_width},
                  {"activation", to_string(s.activation)}};
        } else {
          return {{"type", "global_max_pool"}};
        }
      },
      spec);
}

LayerSpec layer_spec_from_json(const json& j) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "dense") {
    return DenseSpec{j.at("units").get<std::size_t>(), parse_activation(j.value("activation", "identity"))};
  }
  if (type == "dropout") return DropoutSpec{j.at("rate").get<double>()};
  if (type == "embedding") {
    return EmbeddingSpec{j.at("input_dim").get<std::size_t>(), j.at("output_dim").get<std::size_t>(),
                         j.value("mask_zero", true)};
  }
  if (type == "recurrent") {
    return RecurrentSpec{parse_cell(j.value("cell", "gru")), j.at("units").get<std::size_t>(),
                         j.value("bidirectional", false), j.value("return_sequences", false)};
  }
  if (type == "conv1d") {
    return Conv1DSpec{j.at("filters").get<std::size_t>(), j.at("kernel_width").get<std::size_t>(),
                      parse_activation(j.value("activation", "relu"))};
  }
  if (type == "global_max_pool") return GlobalMaxPoolSpec{};
  throw ConfigError("unknown layer type '" + type + "'");
}

void Layer::zero_grad() {
  for (auto* p : parameters()) p->grad.fill(0.0);
}

void glorot_uniform(Tensor& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : p.data()) v = rng.uniform(-limit, limit);
}

// ---- Dense ---------------------------------------------------------------

namespace {

struct DenseCache : LayerCache {
  Tensor input;
  Tensor output;
};

}  // namespace

DenseLayer::DenseLayer(DenseSpec spec, std::size_t in_features, Rng& rng) : spec_(spec), in_(in_features) {
  if (spec_.units == 0 || in_ == 0) throw ConfigError("dense layer needs non-zero input and units");
  weight_.value = Tensor({in_, spec_.units});
  weight_.grad = Tensor({in_, spec_.units});
  bias_.value = Tensor({spec_.units});
  bias_.grad = Tensor({spec_.units});
  glorot_uniform(weight_.value, in_, spec_.units, rng);
}

Tensor DenseLayer::forward(const Tensor& x, ForwardState&, std::unique_ptr<LayerCache>* cache) const {
  require_rank(x, 2, "dense");
  if (x.dim(1) != in_) {
    throw std::invalid_argument("dense: expected " + std::to_string(in_) + " input features, got " +
                                x.shape_string());
  }
  const std::size_t batch = x.dim(0);
  Tensor y({batch, spec_.units});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < spec_.units; ++j) y.at(b, j) = bias_.value[j];
  }
  gemm_add(x.raw(), weight_.value.raw(), y.raw(), batch, in_, spec_.units);
  apply_activation(y, spec_.activation);
  if (cache) {
    auto c = std::make_unique<DenseCache>();
    c->input = x;
    c->output = y;
    *cache = std::move(c);
  }
  return y;
}

Tensor DenseLayer::backward(const Tensor& grad_out, const LayerCache& cache) {
  const auto& c = cache_as<DenseCache>(cache);
  const Tensor g = activation_backward(c.output, grad_out, spec_.activation);
  const std::size_t batch = c.input.dim(0);
  gemm_at_b_add(c.input.raw(), g.raw(), weight_.grad.raw(), batch, in_, spec_.units);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < spec_.units; ++j) bias_.grad[j] += g.at(b, j);
  }
  Tensor dx({batch, in_});
  gemm_a_bt_add(g.raw(), weight_.value.raw(), dx.raw(), batch, spec_.units, in_);
  return dx;
}

// ---- Dropout -------------------------------------------------------------

namespace {

struct DropoutCache : LayerCache {
  std::vector<double> scale;  // empty when the layer acted as identity
};

}  // namespace

DropoutLayer::DropoutLayer(DropoutSpec spec) : spec_(spec) {
  if (!(spec_.rate >= 0.0 && spec_.rate < 1.0)) throw ConfigError("dropout rate must be in [0, 1)");
}

Tensor DropoutLayer::forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const {
  auto c = std::make_unique<DropoutCache>();
  Tensor y = x;
  if (state.training && spec_.rate > 0.0) {
    if (state.rng == nullptr) throw std::logic_error("dropout in training mode needs an rng");
    const double keep_scale = 1.0 / (1.0 - spec_.rate);
    c->scale.resize(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      c->scale[i] = state.rng->uniform01() < spec_.rate ? 0.0 : keep_scale;
      y[i] *= c->scale[i];
    }
  }
  if (cache) *cache = std::move(c);
  return y;
}

Tensor DropoutLayer::backward(const Tensor& grad_out, const LayerCache& cache) {
  const auto& c = cache_as<DropoutCache>(cache);
  Tensor g = grad_out;
  if (!c.scale.empty()) {
    for (std::size_t i = 0; i < g.size(); ++i) g[i] *= c.scale[i];
  }
  return g;
}

// ---- Embedding -----------------------------------------------------------

namespace {

struct EmbeddingCache : LayerCache {
  std::vector<std::size_t> indices;
  std::size_t batch = 0;
  std::size_t steps = 0;
};

}  // namespace

EmbeddingLayer::EmbeddingLayer(EmbeddingSpec spec, Rng& rng) : spec_(spec) {
  if (spec_.input_dim == 0 || spec_.output_dim == 0) throw ConfigError("embedding needs non-zero dimensions");
  table_.value = Tensor({spec_.input_dim, spec_.output_dim});
  table_.grad = Tensor({spec_.input_dim, spec_.output_dim});
  glorot_uniform(table_.value, spec_.input_dim, spec_.output_dim, rng);
}

Tensor EmbeddingLayer::forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const {
  require_rank(x, 2, "embedding");
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t dim = spec_.output_dim;
  Tensor y({batch, steps, dim});
  std::vector<std::size_t> indices(x.size());
  Mask mask(x.size(), 1);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = x[i];
    if (!(v >= 0.0) || v >= static_cast<double>(spec_.input_dim) || v != std::floor(v)) {
      throw std::invalid_argument("embedding: index " + std::to_string(v) + " outside table of " +
                                  std::to_string(spec_.input_dim));
    }
    indices[i] = static_cast<std::size_t>(v);
    if (spec_.mask_zero && indices[i] == 0) mask[i] = 0;
    const double* row = table_.value.raw() + indices[i] * dim;
    std::copy(row, row + dim, y.raw() + i * dim);
  }
  state.mask = spec_.mask_zero ? std::optional<Mask>(std::move(mask)) : std::nullopt;
  if (cache) {
    auto c = std::make_unique<EmbeddingCache>();
    c->indices = std::move(indices);
    c->batch = batch;
    c->steps = steps;
    *cache = std::move(c);
  }
  return y;
}

Tensor EmbeddingLayer::backward(const Tensor& grad_out, const LayerCache& cache) {
  const auto& c = cache_as<EmbeddingCache>(cache);
  const std::size_t dim = spec_.output_dim;
  for (std::size_t i = 0; i < c.indices.size(); ++i) {
    double* row = table_.grad.raw() + c.indices[i] * dim;
    const double* g = grad_out.raw() + i * dim;
    for (std::size_t k = 0; k < dim; ++k) row[k] += g[k];
  }
  return {};
}

// ---- Conv1D --------------------------------------------------------------

namespace {

struct ConvCache : LayerCache {
  Tensor input;
  Tensor output;
};

}  // namespace

Conv1DLayer::Conv1DLayer(Conv1DSpec spec, std::size_t in_features, Rng& rng) : spec_(spec), in_(in_features) {
  if (spec_.filters == 0 || spec_.kernel_width == 0 || in_ == 0) {
    throw ConfigError("conv1d needs non-zero filters, kernel width and input features");
  }
  kernel_.value = Tensor({spec_.kernel_width, in_, spec_.filters});
  kernel_.grad = Tensor({spec_.kernel_width, in_, spec_.filters});
  bias_.value = Tensor({spec_.filters});
  bias_.grad = Tensor({spec_.filters});
  glorot_uniform(kernel_.value, spec_.kernel_width * in_, spec_.kernel_width * spec_.filters, rng);
}

Tensor Conv1DLayer::forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const {
  require_rank(x, 3, "conv1d");
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t k = spec_.kernel_width;
  const std::size_t f = spec_.filters;
  if (x.dim(2) != in_) throw std::invalid_argument("conv1d: input feature mismatch " + x.shape_string());
  if (steps < k) {
    throw std::invalid_argument("conv1d: sequence length " + std::to_string(steps) + " shorter than kernel " +
                                std::to_string(k));
  }
  const std::size_t out_steps = steps - k + 1;
  Tensor y({batch, out_steps, f});
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_steps; ++t) {
      double* out = y.raw() + (b * out_steps + t) * f;
      for (std::size_t j = 0; j < f; ++j) out[j] = bias_.value[j];
      // A window of k consecutive steps is a contiguous [k * in] block.
      gemm_add(x.raw() + (b * steps + t) * in_, kernel_.value.raw(), out, 1, k * in_, f);
    }
  }
  apply_activation(y, spec_.activation);
  state.mask.reset();
  if (cache) {
    auto c = std::make_unique<ConvCache>();
    c->input = x;
    c->output = y;
    *cache = std::move(c);
  }
  return y;
}

Tensor Conv1DLayer::backward(const Tensor& grad_out, const LayerCache& cache) {
  const auto& c = cache_as<ConvCache>(cache);
  const Tensor g = activation_backward(c.output, grad_out, spec_.activation);
  const std::size_t batch = c.input.dim(0);
  const std::size_t steps = c.input.dim(1);
  const std::size_t k = spec_.kernel_width;
  const std::size_t f = spec_.filters;
  const std::size_t out_steps = steps - k + 1;
  Tensor dx(c.input.shape());
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < out_steps; ++t) {
      const double* gt = g.raw() + (b * out_steps + t) * f;
      for (std::size_t j = 0; j < f; ++j) bias_.grad[j] += gt[j];
      gemm_at_b_add(c.input.raw() + (b * steps + t) * in_, gt, kernel_.grad.raw(), 1, k * in_, f);
      gemm_a_bt_add(gt, kernel_.value.raw(), dx.raw() + (b * steps + t) * in_, 1, f, k * in_);
    }
  }
  return dx;
}

// ---- Global max pooling -------------------------------------------------

namespace {

struct PoolCache : LayerCache {
  std::vector<std::size_t> argmax;  // [batch * F] step index
  std::vector<std::size_t> in_shape;
};

}  // namespace

Tensor GlobalMaxPoolLayer::forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const {
  require_rank(x, 3, "global_max_pool");
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t f = x.dim(2);
  if (steps == 0) throw std::invalid_argument("global_max_pool: empty time axis");
  Tensor y({batch, f});
  std::vector<std::size_t> argmax(batch * f, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < f; ++j) {
      double best = x.at(b, 0, j);
      std::size_t best_t = 0;
      for (std::size_t t = 1; t < steps; ++t) {
        if (x.at(b, t, j) > best) {
          best = x.at(b, t, j);
          best_t = t;
        }
      }
      y.at(b, j) = best;
      argmax[b * f + j] = best_t;
    }
  }
  state.mask.reset();
  if (cache) {
    auto c = std::make_unique<PoolCache>();
    c->argmax = std::move(argmax);
    c->in_shape = x.shape();
    *cache = std::move(c);
  }
  return y;
}

Tensor GlobalMaxPoolLayer::backward(const Tensor& grad_out, const LayerCache& cache) {
  const auto& c = cache_as<PoolCache>(cache);
  Tensor dx(c.in_shape);
  const std::size_t batch = c.in_shape[0];
  const std::size_t f = c.in_shape[2];
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < f; ++j) dx.at(b, c.argmax[b * f + j], j) += grad_out.at(b, j);
  }
  return dx;
}

// ---- Shape inference -----------------------------------------------------

LayerShape infer_shape(const LayerSpec& spec, const LayerShape& in) {
  return std::visit(
      [&](const auto& s) -> LayerShape {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, EmbeddingSpec>) {
          if (!in.indices) throw ConfigError("embedding must be the first layer of a sequence model");
          return {s.output_dim, true, false};
        } else {
          if (in.indices) throw ConfigError("sequence inputs must start with an embedding layer");
          if constexpr (std::is_same_v<S, DenseSpec>) {
            if (in.sequence) throw ConfigError("dense layer cannot follow a sequence output; pool or reduce first");
            return {s.units, false, false};
          } else if constexpr (std::is_same_v<S, DropoutSpec>) {
            return in;
          } else if constexpr (std::is_same_v<S, RecurrentSpec>) {
            if (!in.sequence) throw ConfigError("recurrent layer needs a sequence input");
            return {s.units * (s.bidirectional ? 2 : 1), s.return_sequences, false};
          } else if constexpr (std::is_same_v<S, Conv1DSpec>) {
            if (!in.sequence) throw ConfigError("conv1d needs a sequence input");
            return {s.filters, true, false};
          } else {
            if (!in.sequence) throw ConfigError("global max pooling needs a sequence input");
            return {in.features, false, false};
          }
        }
      },
      spec);
}

std::unique_ptr<Layer> make_layer(const LayerSpec& spec, const LayerShape& in, Rng& rng) {
  infer_shape(spec, in);
  return std::visit(
      [&](const auto& s) -> std::unique_ptr<Layer> {
        using S = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<S, DenseSpec>) {
          return std::make_unique<DenseLayer>(s, in.features, rng);
        } else if constexpr (std::is_same_v<S, DropoutSpec>) {
          return std::make_unique<DropoutLayer>(s);
        } else if constexpr (std::is_same_v<S, EmbeddingSpec>) {
          return std::make_unique<EmbeddingLayer>(s, rng);
        } else if constexpr (std::is_same_v<S, RecurrentSpec>) {
          return std::make_unique<RecurrentLayer>(s, in.features, rng);
        } else if constexpr (std::is_same_v<S, Conv1DSpec>) {
          return std::make_unique<Conv1DLayer>(s, in.features, rng);
        } else {
          return std::make_unique<GlobalMaxPoolLayer>();
        }
      },
      spec);
}

}  // namespace eraclass
