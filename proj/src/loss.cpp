#include "eraclass/loss.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "eraclass/error.hpp"

namespace eraclass {

LossKind parse_loss(std::string_view s) {
  if (s == "binary_ce") return LossKind::binary_ce;
  if (s == "sparse_categorical_ce") return LossKind::sparse_categorical_ce;
  throw ConfigError("unknown loss '" + std::string(s) + "'");
}

std::string_view to_string(LossKind k) {
  return k == LossKind::binary_ce ? "binary_ce" : "sparse_categorical_ce";
}

namespace {

std::size_t columns(const Tensor& pred) { return pred.rank() >= 2 ? pred.shape().back() : 1; }

double clip(double p) { return std::clamp(p, kProbClip, 1.0 - kProbClip); }

void check_targets(const Tensor& pred, std::span<const std::size_t> targets, LossKind kind) {
  const std::size_t cols = columns(pred);
  const std::size_t rows = cols ? pred.size() / cols : 0;
  if (rows != targets.size()) throw std::invalid_argument("loss: prediction rows do not match targets");
  const std::size_t classes = kind == LossKind::binary_ce ? 2 : cols;
  if (kind == LossKind::binary_ce && cols != 1) {
    throw std::invalid_argument("binary_ce expects a single output column");
  }
  for (std::size_t t : targets) {
    if (t >= classes) {
      throw std::invalid_argument("loss: target " + std::to_string(t) + " out of range for " +
                                  std::to_string(classes) + " classes");
    }
  }
}

}  // namespace

double loss(const Tensor& pred, std::span<const std::size_t> targets, LossKind kind) {
  check_targets(pred, targets, kind);
  if (targets.empty()) return 0.0;
  const std::size_t cols = columns(pred);
  double total = 0.0;
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (kind == LossKind::binary_ce) {
      const double p = clip(pred[r]);
      total -= targets[r] == 1 ? std::log(p) : std::log(1.0 - p);
    } else {
      total -= std::log(clip(pred[r * cols + targets[r]]));
    }
  }
  return total / static_cast<double>(targets.size());
}

Tensor loss_grad_logits(const Tensor& pred, std::span<const std::size_t> targets, LossKind kind) {
  check_targets(pred, targets, kind);
  Tensor g = pred;
  const std::size_t cols = columns(pred);
  const double inv_b = targets.empty() ? 0.0 : 1.0 / static_cast<double>(targets.size());
  for (std::size_t r = 0; r < targets.size(); ++r) {
    if (kind == LossKind::binary_ce) {
      g[r] = (pred[r] - static_cast<double>(targets[r])) * inv_b;
    } else {
      for (std::size_t c = 0; c < cols; ++c) {
        g[r * cols + c] = (pred[r * cols + c] - (c == targets[r] ? 1.0 : 0.0)) * inv_b;
      }
    }
  }
  return g;
}

std::size_t predicted_class(const Tensor& pred, std::size_t row) {
  const std::size_t cols = columns(pred);
  if (cols == 1) return pred[row] >= 0.5 ? 1 : 0;
  const double* r = pred.raw() + row * cols;
  return static_cast<std::size_t>(std::max_element(r, r + cols) - r);
}

}  // namespace eraclass
