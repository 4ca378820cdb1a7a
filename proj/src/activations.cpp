#include "eraclass/activations.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "eraclass/error.hpp"

namespace eraclass {

Activation parse_activation(std::string_view s) {
  if (s == "identity" || s == "linear") return Activation::identity;
  if (s == "relu") return Activation::relu;
  if (s == "sigmoid") return Activation::sigmoid;
  if (s == "tanh") return Activation::tanh;
  if (s == "softmax") return Activation::softmax;
  throw ConfigError("unknown activation '" + std::string(s) + "'");
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::softmax: return "softmax";
  }
  return "?";
}

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void softmax_rows(double* data, std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    double* row = data + r * cols;
    const double mx = *std::max_element(row, row + cols);
    double sum = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      row[c] = std::exp(row[c] - mx);
      sum += row[c];
    }
    for (std::size_t c = 0; c < cols; ++c) row[c] /= sum;
  }
}

}  // namespace

void apply_activation(Tensor& x, Activation a) {
  switch (a) {
    case Activation::identity:
      return;
    case Activation::relu:
      for (double& v : x.data()) v = v < 0.0 ? 0.0 : v;  // NaN passes through
      return;
    case Activation::sigmoid:
      for (double& v : x.data()) v = sigmoid(v);
      return;
    case Activation::tanh:
      for (double& v : x.data()) v = std::tanh(v);
      return;
    case Activation::softmax: {
      if (x.rank() == 0 || x.size() == 0) return;
      const std::size_t cols = x.shape().back();
      softmax_rows(x.raw(), x.size() / cols, cols);
      return;
    }
  }
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  apply_activation(y, Activation::relu);
  return y;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  apply_activation(y, Activation::sigmoid);
  return y;
}

Tensor softmax(const Tensor& x) {
  Tensor y = x;
  apply_activation(y, Activation::softmax);
  return y;
}

Tensor activation_backward(const Tensor& y, const Tensor& grad_y, Activation a) {
  Tensor g = grad_y;
  const std::size_t n = y.size();
  switch (a) {
    case Activation::identity:
      break;
    case Activation::relu:
      for (std::size_t i = 0; i < n; ++i) g[i] = y[i] > 0.0 ? g[i] : 0.0;
      break;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < n; ++i) g[i] *= y[i] * (1.0 - y[i]);
      break;
    case Activation::tanh:
      for (std::size_t i = 0; i < n; ++i) g[i] *= 1.0 - y[i] * y[i];
      break;
    case Activation::softmax: {
      const std::size_t cols = y.shape().back();
      for (std::size_t r = 0; r < n / cols; ++r) {
        const double* yr = y.raw() + r * cols;
        double* gr = g.raw() + r * cols;
        double dot = 0.0;
        for (std::size_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
        for (std::size_t c = 0; c < cols; ++c) gr[c] = yr[c] * (gr[c] - dot);
      }
      break;
    }
  }
  return g;
}

}  // namespace eraclass
