#pragma once

#include <string_view>

#include "eraclass/tensor.hpp"

namespace eraclass {

enum class Activation { identity, relu, sigmoid, tanh, softmax };

Activation parse_activation(std::string_view s);
std::string_view to_string(Activation a);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
// Over the last axis, shifted by the row max for stability.
Tensor softmax(const Tensor& x);

double sigmoid(double x);

// In place. softmax acts on the last axis.
void apply_activation(Tensor& x, Activation a);

// Gradient with respect to the pre-activation, given the activation output
// `y` and the gradient with respect to `y`.
Tensor activation_backward(const Tensor& y, const Tensor& grad_y, Activation a);

}  // namespace eraclass
