#include "eraclass/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <stdexcept>

#include "eraclass/error.hpp"

namespace eraclass {

using nlohmann::json;

ModelSpec cnn_spec(const CnnSpec& cnn, std::size_t num_classes, std::size_t input_dim, std::size_t max_len) {
  if (cnn.kernel_width == 0 || cnn.kernel_width > max_len) {
    throw ConfigError("cnn kernel width " + std::to_string(cnn.kernel_width) + " must be in [1, max_len = " +
                      std::to_string(max_len) + "]");
  }
  ModelSpec spec;
  // Padding stays visible to the convolution, so no mask is produced.
  spec.layers.emplace_back(EmbeddingSpec{input_dim, cnn.embedding_dim, false});
  spec.layers.emplace_back(Conv1DSpec{cnn.filters, cnn.kernel_width, Activation::relu});
  spec.layers.emplace_back(GlobalMaxPoolSpec{});
  for (std::size_t w : cnn.dense_widths) spec.layers.emplace_back(DenseSpec{w, Activation::relu});
  if (cnn.dropout > 0.0) spec.layers.emplace_back(DropoutSpec{cnn.dropout});
  spec.layers.emplace_back(output_layer(num_classes));
  spec.loss = loss_for(num_classes);
  spec.optimizer.kind = OptimizerKind::rmsprop;
  spec.batch_size = 128;
  spec.epochs = 10;
  return spec;
}

void LogRegSpec::validate() const {
  if (!(C > 0.0) || !std::isfinite(C)) throw ConfigError("logistic regression C must be positive");
  if (!(tolerance > 0.0)) throw ConfigError("logistic regression tolerance must be positive");
}

LogisticRegression::LogisticRegression(std::size_t features, std::size_t num_classes, double C)
    : features_(features), classes_(num_classes), C_(C) {
  if (num_classes < 2) throw ConfigError("logistic regression needs at least two classes");
  theta_.assign((features_ + 1) * outputs(), 0.0);
}

namespace {

// Z = X W + b for packed theta.
std::vector<double> logits(const FeatureMatrix& x, std::size_t k, std::span<const double> theta) {
  std::vector<double> z(x.rows * k);
  const double* bias = theta.data() + x.cols * k;
  for (std::size_t r = 0; r < x.rows; ++r) std::copy_n(bias, k, z.data() + r * k);
  gemm_add(x.values.data(), theta.data(), z.data(), x.rows, x.cols, k);
  return z;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

}  // namespace

Tensor LogisticRegression::predict_proba(const FeatureMatrix& x) const {
  if (x.cols != features_) throw std::invalid_argument("logreg: feature width mismatch");
  const std::size_t k = outputs();
  Tensor out({x.rows, k}, logits(x, k, theta_));
  apply_activation(out, k == 1 ? Activation::sigmoid : Activation::softmax);
  return out;
}

std::vector<std::size_t> LogisticRegression::predict(const FeatureMatrix& x) const {
  const Tensor p = predict_proba(x);
  std::vector<std::size_t> out(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) out[r] = predicted_class(p, r);
  return out;
}

double logreg_objective(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t num_classes, double C,
                        std::span<const double> theta, std::vector<double>* grad) {
  const std::size_t k = num_classes == 2 ? 1 : num_classes;
  if (theta.size() != (x.cols + 1) * k) throw std::invalid_argument("logreg: parameter size mismatch");
  if (y.size() != x.rows || x.rows == 0) throw std::invalid_argument("logreg: labels do not match rows");
  const std::vector<double> z = logits(x, k, theta);
  const double inv_n = 1.0 / static_cast<double>(x.rows);
  std::vector<double> dz(z.size());
  double total = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    if (y[r] >= num_classes) throw std::invalid_argument("logreg: label out of range");
    if (k == 1) {
      const double zr = z[r];
      total += softplus(zr) - (y[r] == 1 ? zr : 0.0);
      dz[r] = (sigmoid(zr) - static_cast<double>(y[r])) * inv_n;
    } else {
      const double* zr = z.data() + r * k;
      const double m = *std::max_element(zr, zr + k);
      double s = 0.0;
      for (std::size_t c = 0; c < k; ++c) s += std::exp(zr[c] - m);
      const double lse = m + std::log(s);
      total += lse - zr[y[r]];
      for (std::size_t c = 0; c < k; ++c) {
        dz[r * k + c] = (std::exp(zr[c] - lse) - (c == y[r] ? 1.0 : 0.0)) * inv_n;
      }
    }
  }
  const std::size_t nw = x.cols * k;
  double ridge = 0.0;
  for (std::size_t i = 0; i < nw; ++i) ridge += theta[i] * theta[i];
  const double lambda = 1.0 / C;
  if (grad) {
    grad->assign(theta.size(), 0.0);
    gemm_at_b_add(x.values.data(), dz.data(), grad->data(), x.rows, x.cols, k);
    for (std::size_t i = 0; i < nw; ++i) (*grad)[i] += 2.0 * lambda * theta[i];
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t c = 0; c < k; ++c) (*grad)[nw + c] += dz[r * k + c];
    }
  }
  return total * inv_n + lambda * ridge;
}

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

double max_abs(const std::vector<double>& v) {
  double m = 0.0;
  for (double e : v) m = std::max(m, std::abs(e));
  return m;
}

}  // namespace

LogRegFit logreg_fit(const FeatureMatrix& x, std::span<const std::size_t> y, std::size_t num_classes,
                     const LogRegSpec& spec) {
  spec.validate();
  LogRegFit fit;
  fit.model = LogisticRegression(x.cols, num_classes, spec.C);
  std::vector<double>& theta = fit.model.params();
  const std::size_t n = theta.size();

  std::vector<double> g;
  double f = logreg_objective(x, y, num_classes, spec.C, theta, &g);
  fit.objective_trace.push_back(f);

  constexpr std::size_t kMemory = 10;
  constexpr double kArmijo = 1e-4;
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;
  std::vector<double> d(n), theta_new(n), g_new;

  while (true) {
    fit.gradient_norm = max_abs(g);
    if (fit.gradient_norm <= spec.tolerance) {
      fit.converged = true;
      break;
    }
    if (fit.iterations >= spec.max_iterations) break;

    // Two-loop recursion for d = -H g.
    d = g;
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * dot(s_hist[i], d);
      for (std::size_t j = 0; j < n; ++j) d[j] -= alpha[i] * y_hist[i][j];
    }
    double gamma = 1.0;
    if (!s_hist.empty()) gamma = dot(s_hist.back(), y_hist.back()) / dot(y_hist.back(), y_hist.back());
    for (double& v : d) v *= gamma;
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * dot(y_hist[i], d);
      for (std::size_t j = 0; j < n; ++j) d[j] += s_hist[i][j] * (alpha[i] - beta);
    }
    for (double& v : d) v = -v;

    double slope = dot(g, d);
    if (!(slope < 0.0)) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t j = 0; j < n; ++j) d[j] = -g[j];
      slope = dot(g, d);
    }
    double step = s_hist.empty() ? std::min(1.0, 1.0 / std::sqrt(dot(g, g))) : 1.0;
    double f_new = 0.0;
    bool accepted = false;
    for (int tries = 0; tries < 60; ++tries) {
      for (std::size_t j = 0; j < n; ++j) theta_new[j] = theta[j] + step * d[j];
      f_new = logreg_objective(x, y, num_classes, spec.C, theta_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + kArmijo * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no further progress at machine precision

    std::vector<double> s(n), yv(n);
    for (std::size_t j = 0; j < n; ++j) {
      s[j] = theta_new[j] - theta[j];
      yv[j] = g_new[j] - g[j];
    }
    const double sy = dot(s, yv);
    if (sy > 1e-12 * dot(yv, yv)) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(yv));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > kMemory) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    theta.swap(theta_new);
    g.swap(g_new);
    f = f_new;
    ++fit.iterations;
    fit.objective_trace.push_back(f);
  }
  return fit;
}

Checkpoint to_checkpoint(const LogisticRegression& model, json meta) {
  Checkpoint ckpt;
  ckpt.kind = "logreg";
  ckpt.spec = {{"C", model.C()}, {"num_classes", model.num_classes()}, {"features", model.features()}};
  ckpt.meta = std::move(meta);
  const std::size_t k = model.outputs();
  const auto& theta = model.params();
  const auto split = theta.begin() + static_cast<std::ptrdiff_t>(model.features() * k);
  ckpt.tensors.emplace_back("kernel", Tensor({model.features(), k}, std::vector<double>(theta.begin(), split)));
  ckpt.tensors.emplace_back("bias", Tensor({k}, std::vector<double>(split, theta.end())));
  return ckpt;
}

LogisticRegression logreg_from_checkpoint(const Checkpoint& ckpt) {
  if (ckpt.kind != "logreg") throw DataError("checkpoint kind '" + ckpt.kind + "' is not logistic regression");
  LogisticRegression model(ckpt.spec.at("features").get<std::size_t>(), ckpt.spec.at("num_classes").get<std::size_t>(),
                           ckpt.spec.at("C").get<double>());
  const Tensor& w = ckpt.tensor("kernel");
  const Tensor& b = ckpt.tensor("bias");
  if (w.size() + b.size() != model.params().size()) throw DataError("logreg checkpoint has wrong tensor sizes");
  std::copy(w.data().begin(), w.data().end(), model.params().begin());
  std::copy(b.data().begin(), b.data().end(), model.params().begin() + static_cast<std::ptrdiff_t>(w.size()));
  return model;
}

}  // namespace eraclass
