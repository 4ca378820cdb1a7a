#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include "eraclass/tensor.hpp"

namespace eraclass {

enum class LossKind { binary_ce, sparse_categorical_ce };

LossKind parse_loss(std::string_view s);
std::string_view to_string(LossKind k);

inline constexpr double kProbClip = 1e-12;

/// Mean cross-entropy over the batch with predictions clipped to
/// [1e-12, 1 - 1e-12].
///   binary_ce: pred is [batch, 1] (or [batch]); -mean(y ln p + (1-y) ln(1-p)).
///   sparse_categorical_ce: pred is [batch, classes]; -mean(ln p[target]).
/// Throws std::invalid_argument when a target is out of range.
double loss(const Tensor& pred, std::span<const std::size_t> targets, LossKind kind);

// Gradient of the mean loss with respect to the logits feeding a sigmoid
// (binary) or softmax (categorical) output: (p - onehot(y)) / batch.
Tensor loss_grad_logits(const Tensor& pred, std::span<const std::size_t> targets, LossKind kind);

// Predicted class per row: p >= 0.5 for a single output column, else argmax.
std::size_t predicted_class(const Tensor& pred, std::size_t row);

}  // namespace eraclass
