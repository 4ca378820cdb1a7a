#include "eraclass/optimizer.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "eraclass/error.hpp"

namespace eraclass {

OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "rmsprop") return OptimizerKind::rmsprop;
  if (s == "adam") return OptimizerKind::adam;
  throw ConfigError("unknown optimizer '" + std::string(s) + "'");
}

std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::adam ? "adam" : "rmsprop"; }

void OptimizerSpec::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be positive");
}

Optimizer::Optimizer(OptimizerSpec spec) : spec_(spec) { spec_.validate(); }

void Optimizer::step(const std::vector<Parameter*>& params) {
  if (m_.empty()) {
    for (const auto* p : params) {
      m_.emplace_back(p->value.size(), 0.0);
      v_.emplace_back(p->value.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw std::logic_error("optimizer bound to a different parameter set");
  ++t_;
  const double lr = spec_.learning_rate;
  const double eps = spec_.epsilon;
  const double bc1 = 1.0 - std::pow(spec_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(spec_.beta2, static_cast<double>(t_));

  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& theta = params[k]->value;
    const auto& g = params[k]->grad;
    auto& m = m_[k];
    auto& v = v_[k];
    if (spec_.kind == OptimizerKind::rmsprop) {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        v[i] = spec_.rho * v[i] + (1.0 - spec_.rho) * g[i] * g[i];
        theta[i] -= lr * g[i] / (std::sqrt(v[i]) + eps);
      }
    } else {
      for (std::size_t i = 0; i < theta.size(); ++i) {
        m[i] = spec_.beta1 * m[i] + (1.0 - spec_.beta1) * g[i];
        v[i] = spec_.beta2 * v[i] + (1.0 - spec_.beta2) * g[i] * g[i];
        theta[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps);
      }
    }
  }
}

}  // namespace eraclass
