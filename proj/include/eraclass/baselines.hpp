#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "eraclass/checkpoint.hpp"
#include "eraclass/features.hpp"
#include "eraclass/model.hpp"

namespace eraclass {

enum class PoolingKind { global_max };

struct CnnSpec {
  std::size_t embedding_dim = 64;
  std::size_t filters = 128;
  std::size_t kernel_width = 5;
  PoolingKind pooling = PoolingKind::global_max;
  std::vector<std::size_t> dense_widths;  // relu layers after pooling
  double dropout = 0.0;                   // before the output layer
};

// Embedding -> Conv1D(relu) -> global max pool -> [Dense relu]* ->
// [Dropout] -> output. Throws ConfigError when kernel_width > max_len.
ModelSpec cnn_spec(const CnnSpec& cnn, std::size_t num_classes, std::size_t input_dim, std::size_t max_len);

struct LogRegSpec {
  double C = 1.0;  // inverse ridge strength, lambda = 1 / C
  std::size_t max_iterations = 200;
  double tolerance = 1e-6;  // on the max-norm of the gradient

  void validate() const;
};

/// Ridge-penalized logistic regression. Two classes use one sigmoid output,
/// more use a multinomial softmax. Objective:
///   J(W, b) = mean_i logloss(x_i W + b, y_i) + (1 / C) * ||W||^2
/// with the bias unpenalized.
class LogisticRegression {
 public:
  LogisticRegression() = default;
  LogisticRegression(std::size_t features, std::size_t num_classes, double C);

  std::size_t features() const { return features_; }
  std::size_t num_classes() const { return classes_; }
  std::size_t outputs() const { return classes_ == 2 ? 1 : classes_; }
  double C() const { return C_; }

  // Parameters packed as W ([features, outputs] row-major) then b.
  std::vector<double>& params() { return theta_; }
  const std::vector<double>& params() const { return theta_; }

  Tensor predict_proba(const FeatureMatrix& x) const;
  std::vector<std::size_t> predict(const FeatureMatrix& x) const;

 private:
  std::size_t features_ = 0;
  std::size_t classes_ = 0;
  double C_ = 1.0;
  std::vector<double> theta_;
};

// J at packed parameters `theta`; writes dJ/dtheta into `grad` when given.
double logreg_objective(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t num_classes, double C,
                        std::span<const double> theta, std::vector<double>* grad = nullptr);

struct LogRegFit {
  LogisticRegression model;
  bool converged = false;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  std::vector<double> objective_trace;  // J after every accepted iterate, starting at theta = 0
};

/// L-BFGS (memory 10) with Armijo backtracking, from all-zero parameters.
/// Stops when the gradient max-norm reaches the tolerance or after
/// max_iterations; `converged` is false in the latter case and the best
/// iterate is returned.
LogRegFit logreg_fit(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t num_classes,
                     const LogRegSpec& spec);

Checkpoint to_checkpoint(const LogisticRegression& model, nlohmann::json meta = nlohmann::json::object());
LogisticRegression logreg_from_checkpoint(const Checkpoint& ckpt);

}  // namespace eraclass
