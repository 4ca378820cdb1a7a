#pragma once

// Central finite-difference checks of layer gradients, shared by the unit
// and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "eraclass/layers.hpp"
#include "eraclass/rng.hpp"

namespace eraclass::gradcheck {

inline constexpr double kStep = 1e-5;
inline constexpr double kTolerance = 1e-4;
// Gradients below this magnitude are compared absolutely: their relative
// error is dominated by finite-difference round-off, not by the analytic
// formula.
inline constexpr double kFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kFloor});
}

inline Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(std::move(shape));
  for (double& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

struct Result {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
  std::string worst;  // which entry produced max_rel_error
};

/// Checks every parameter gradient (and the input gradient when
/// `check_input`) of `layer` at input `x` against central differences of
/// the scalar probe L = sum(w * forward(x)), w random.
inline Result check_layer(Layer& layer, Tensor x, const std::optional<Mask>& mask, bool check_input, Rng& rng) {
  auto run = [&](const Tensor& in, std::unique_ptr<LayerCache>* cache) {
    ForwardState state;
    state.mask = mask;
    return layer.forward(in, state, cache);
  };
  std::unique_ptr<LayerCache> cache;
  const Tensor y = run(x, &cache);
  const Tensor w = random_tensor(y.shape(), rng);
  auto probe = [&](const Tensor& in) {
    const Tensor out = run(in, nullptr);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += w[i] * out[i];
    return s;
  };

  layer.zero_grad();
  const Tensor dx = layer.backward(w, *cache);

  Result r;
  auto record = [&](double analytic, double numeric, const std::string& where) {
    const double e = relative_error(analytic, numeric);
    ++r.checked;
    if (e > r.max_rel_error || !std::isfinite(e)) {
      r.max_rel_error = std::isfinite(e) ? e : 1e300;
      r.worst = where + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
    }
  };

  const auto params = layer.parameters();
  const auto names = layer.parameter_names();
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor& value = params[p]->value;
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + kStep;
      const double up = probe(x);
      value[i] = saved - kStep;
      const double down = probe(x);
      value[i] = saved;
      record(params[p]->grad[i], (up - down) / (2 * kStep), names[p] + "[" + std::to_string(i) + "]");
    }
  }
  if (check_input) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double saved = x[i];
      x[i] = saved + kStep;
      const double up = probe(x);
      x[i] = saved - kStep;
      const double down = probe(x);
      x[i] = saved;
      record(dx[i], (up - down) / (2 * kStep), "input[" + std::to_string(i) + "]");
    }
  }
  return r;
}

// Random post-padded mask: each row keeps a prefix of 0..steps real steps.
inline Mask random_mask(std::size_t batch, std::size_t steps, Rng& rng) {
  Mask m(batch * steps, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    const std::size_t len = rng.uniform_index(steps + 1);
    for (std::size_t t = 0; t < len; ++t) m[b * steps + t] = 1;
  }
  return m;
}

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) { return lo + rng.uniform_index(hi - lo + 1); }

enum class Family { dense, embedding, gru, lstm, bigru, conv1d, global_max_pool };

inline const char* family_name(Family f) {
  switch (f) {
    case Family::dense: return "dense";
    case Family::embedding: return "embedding";
    case Family::gru: return "GRU";
    case Family::lstm: return "LSTM";
    case Family::bigru: return "BiGRU";
    case Family::conv1d: return "Conv1D";
    case Family::global_max_pool: return "global max pool";
  }
  return "?";
}

/// One random small configuration of `family`, checked end to end.
inline Result check_random_config(Family family, Rng& rng) {
  const Activation smooth[] = {Activation::identity, Activation::tanh, Activation::sigmoid};
  const std::size_t batch = pick(rng, 1, 3);
  switch (family) {
    case Family::dense: {
      const Activation acts[] = {Activation::identity, Activation::tanh, Activation::sigmoid, Activation::softmax};
      const std::size_t in = pick(rng, 1, 6);
      DenseLayer layer({pick(rng, 1, 5), acts[rng.uniform_index(4)]}, in, rng);
      for (double& v : layer.bias().value.storage()) v = rng.uniform(-0.5, 0.5);
      return check_layer(layer, random_tensor({batch, in}, rng), std::nullopt, true, rng);
    }
    case Family::embedding: {
      const std::size_t vocab = pick(rng, 3, 8), steps = pick(rng, 1, 5);
      EmbeddingLayer layer({vocab, pick(rng, 1, 4), rng.uniform01() < 0.5}, rng);
      Tensor x({batch, steps});
      for (double& v : x.storage()) v = static_cast<double>(rng.uniform_index(vocab));
      return check_layer(layer, x, std::nullopt, false, rng);
    }
    case Family::gru:
    case Family::lstm:
    case Family::bigru: {
      RecurrentSpec spec;
      spec.cell = family == Family::lstm ? CellType::lstm : CellType::gru;
      spec.bidirectional = family == Family::bigru;
      spec.units = pick(rng, 1, 4);
      spec.return_sequences = rng.uniform01() < 0.5;
      const std::size_t steps = pick(rng, 1, 4), in = pick(rng, 1, 4);
      RecurrentLayer layer(spec, in, rng);
      for (std::size_t d = 0; d < (spec.bidirectional ? 2u : 1u); ++d) {
        for (double& v : layer.direction(d).bias.value.storage()) v = rng.uniform(-0.5, 0.5);
      }
      std::optional<Mask> mask;
      if (rng.uniform01() < 0.5) mask = random_mask(batch, steps, rng);
      return check_layer(layer, random_tensor({batch, steps, in}, rng), mask, true, rng);
    }
    case Family::conv1d: {
      const std::size_t k = pick(rng, 1, 3), steps = k + pick(rng, 0, 4), in = pick(rng, 1, 4);
      Conv1DLayer layer({pick(rng, 1, 4), k, smooth[rng.uniform_index(3)]}, in, rng);
      for (double& v : layer.bias().value.storage()) v = rng.uniform(-0.5, 0.5);
      return check_layer(layer, random_tensor({batch, steps, in}, rng), std::nullopt, true, rng);
    }
    case Family::global_max_pool: {
      GlobalMaxPoolLayer layer;
      return check_layer(layer, random_tensor({batch, pick(rng, 1, 5), pick(rng, 1, 4)}, rng), std::nullopt,
                         true, rng);
    }
  }
  return {};
}

}  // namespace eraclass::gradcheck
