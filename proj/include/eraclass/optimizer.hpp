#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "eraclass/tensor.hpp"

namespace eraclass {

enum class OptimizerKind { rmsprop, adam };

OptimizerKind parse_optimizer(std::string_view s);
std::string_view to_string(OptimizerKind k);

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::rmsprop;
  double learning_rate = 1e-3;
  double rho = 0.9;     // rmsprop
  double beta1 = 0.9;   // adam
  double beta2 = 0.999; // adam
  double epsilon = 1e-7;

  void validate() const;
};

struct Parameter {
  Tensor value;
  Tensor grad;
};

/// RMSProp: v <- rho v + (1 - rho) g^2;  theta <- theta - lr g / (sqrt(v) + eps)
/// Adam:    m <- b1 m + (1 - b1) g;  v <- b2 v + (1 - b2) g^2;
///          theta <- theta - lr (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
class Optimizer {
 public:
  explicit Optimizer(OptimizerSpec spec);

  // One update of every parameter from its accumulated gradient.
  void step(const std::vector<Parameter*>& params);

  std::size_t iterations() const { return t_; }
  const OptimizerSpec& spec() const { return spec_; }

 private:
  OptimizerSpec spec_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

}  // namespace eraclass
