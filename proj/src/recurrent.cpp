#include <cmath>
#include <stdexcept>

#include "eraclass/error.hpp"
#include "eraclass/layers.hpp"

namespace eraclass {

namespace {

// Per-step values kept for backpropagation through time, one entry per
// processed step in processing order.
struct StepCache {
  std::size_t t = 0;          // time index in the input
  std::vector<double> h_prev; // [B, u]
  std::vector<double> c_prev; // [B, u], LSTM only
  std::vector<double> act;    // [B, G*u] gate activations
  std::vector<double> c_new;  // [B, u], LSTM only
};

struct RecurrentCache : LayerCache {
  Tensor input;
  Mask mask;  // [B*T], all ones when the input had no mask
  std::vector<std::vector<StepCache>> steps;  // per direction
};

double sig(double x) { return sigmoid(x); }

// C[m, n] += A[m, k] * B[:, off:off+n] where B has row stride ldb.
void mul_cols_add(const double* a, const double* b, std::size_t ldb, std::size_t off, double* c, std::size_t m,
                  std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * ldb + off;
      double* crow = c + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
}

// C[m, k] += A[m, n] * (B[:, off:off+n])^T where B has row stride ldb.
void mul_cols_t_add(const double* a, const double* b, std::size_t ldb, std::size_t off, double* c, std::size_t m,
                    std::size_t n, std::size_t k) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double* brow = b + p * ldb + off;
      const double* arow = a + i * n;
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += arow[j] * brow[j];
      c[i * k + p] += s;
    }
  }
}

// C[:, off:off+n] += A[m, k]^T * D[m, n], C with row stride ldc.
void mul_t_cols_add(const double* a, const double* d, double* c, std::size_t ldc, std::size_t off, std::size_t m,
                    std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      double* crow = c + p * ldc + off;
      const double* drow = d + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * drow[j];
    }
  }
}

}  // namespace

RecurrentLayer::RecurrentLayer(RecurrentSpec spec, std::size_t in_features, Rng& rng)
    : spec_(spec), in_(in_features) {
  if (spec_.units == 0 || in_ == 0) throw ConfigError("recurrent layer needs non-zero input and units");
  const std::size_t u = spec_.units;
  const std::size_t gu = gates() * u;
  dirs_.resize(spec_.bidirectional ? 2 : 1);
  for (auto& d : dirs_) {
    d.kernel.value = Tensor({in_, gu});
    d.kernel.grad = Tensor({in_, gu});
    d.recurrent.value = Tensor({u, gu});
    d.recurrent.grad = Tensor({u, gu});
    d.bias.value = Tensor({gu});
    d.bias.grad = Tensor({gu});
    glorot_uniform(d.kernel.value, in_, gu, rng);
    glorot_uniform(d.recurrent.value, u, gu, rng);
  }
}

std::vector<Parameter*> RecurrentLayer::parameters() {
  std::vector<Parameter*> out;
  for (auto& d : dirs_) {
    out.push_back(&d.kernel);
    out.push_back(&d.recurrent);
    out.push_back(&d.bias);
  }
  return out;
}

std::vector<std::string> RecurrentLayer::parameter_names() const {
  std::vector<std::string> out;
  for (std::size_t d = 0; d < dirs_.size(); ++d) {
    const std::string prefix = d == 0 ? "forward/" : "backward/";
    out.push_back(prefix + "kernel");
    out.push_back(prefix + "recurrent_kernel");
    out.push_back(prefix + "bias");
  }
  return out;
}

Tensor RecurrentLayer::forward(const Tensor& x, ForwardState& state, std::unique_ptr<LayerCache>* cache) const {
  if (x.rank() != 3 || x.dim(2) != in_) {
    throw std::invalid_argument("recurrent: expected [batch, steps, " + std::to_string(in_) + "], got " +
                                x.shape_string());
  }
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t u = spec_.units;
  const std::size_t g = gates();
  const std::size_t gu = g * u;
  const std::size_t width = output_features();
  const bool gru = spec_.cell == CellType::gru;

  Mask mask = state.mask ? *state.mask : Mask(batch * steps, 1);
  if (mask.size() != batch * steps) throw std::invalid_argument("recurrent: mask does not match input");

  Tensor y = spec_.return_sequences ? Tensor({batch, steps, width}) : Tensor({batch, width});
  auto rc = cache ? std::make_unique<RecurrentCache>() : nullptr;
  if (rc) rc->steps.resize(dirs_.size());

  std::vector<double> xt(batch * in_);
  std::vector<double> pre(batch * gu);
  std::vector<double> hu(batch * gu);
  std::vector<double> rh(batch * u);

  for (std::size_t d = 0; d < dirs_.size(); ++d) {
    const Direction& dir = dirs_[d];
    const double* W = dir.kernel.value.raw();
    const double* U = dir.recurrent.value.raw();
    const double* bias = dir.bias.value.raw();
    std::vector<double> h(batch * u, 0.0);
    std::vector<double> c(gru ? 0 : batch * u, 0.0);

    for (std::size_t s = 0; s < steps; ++s) {
      const std::size_t t = d == 0 ? s : steps - 1 - s;
      for (std::size_t b = 0; b < batch; ++b) {
        std::copy_n(x.raw() + (b * steps + t) * in_, in_, xt.data() + b * in_);
        std::copy_n(bias, gu, pre.data() + b * gu);
      }
      gemm_add(xt.data(), W, pre.data(), batch, in_, gu);

      StepCache sc;
      if (rc) {
        sc.t = t;
        sc.h_prev = h;
        if (!gru) sc.c_prev = c;
      }
      std::vector<double> act(batch * gu);
      std::vector<double> h_new(batch * u);
      std::vector<double> c_new(gru ? 0 : batch * u);

      if (gru) {
        std::fill(hu.begin(), hu.end(), 0.0);
        mul_cols_add(h.data(), U, gu, 0, hu.data(), batch, u, 2 * u);  // into [B, 2u] packed
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < u; ++j) {
            const double z = sig(pre[b * gu + j] + hu[b * 2 * u + j]);
            const double r = sig(pre[b * gu + u + j] + hu[b * 2 * u + u + j]);
            act[b * gu + j] = z;
            act[b * gu + u + j] = r;
            rh[b * u + j] = r * h[b * u + j];
          }
        }
        std::vector<double> cand(batch * u, 0.0);
        mul_cols_add(rh.data(), U, gu, 2 * u, cand.data(), batch, u, u);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < u; ++j) {
            const double hh = std::tanh(pre[b * gu + 2 * u + j] + cand[b * u + j]);
            act[b * gu + 2 * u + j] = hh;
            const double z = act[b * gu + j];
            h_new[b * u + j] = z * h[b * u + j] + (1.0 - z) * hh;
          }
        }
      } else {
        gemm_add(h.data(), U, pre.data(), batch, u, gu);
        for (std::size_t b = 0; b < batch; ++b) {
          for (std::size_t j = 0; j < u; ++j) {
            const double* p = pre.data() + b * gu;
            const double i = sig(p[j]);
            const double f = sig(p[u + j]);
            const double gg = std::tanh(p[2 * u + j]);
            const double o = sig(p[3 * u + j]);
            double* a = act.data() + b * gu;
            a[j] = i;
            a[u + j] = f;
            a[2 * u + j] = gg;
            a[3 * u + j] = o;
            const double cn = f * c[b * u + j] + i * gg;
            c_new[b * u + j] = cn;
            h_new[b * u + j] = o * std::tanh(cn);
          }
        }
      }

      for (std::size_t b = 0; b < batch; ++b) {
        if (!mask[b * steps + t]) continue;
        std::copy_n(h_new.data() + b * u, u, h.data() + b * u);
        if (!gru) std::copy_n(c_new.data() + b * u, u, c.data() + b * u);
        if (spec_.return_sequences) std::copy_n(h_new.data() + b * u, u, &y.at(b, t, d * u));
      }
      if (rc) {
        sc.act = std::move(act);
        sc.c_new = std::move(c_new);
        rc->steps[d].push_back(std::move(sc));
      }
    }
    if (!spec_.return_sequences) {
      for (std::size_t b = 0; b < batch; ++b) std::copy_n(h.data() + b * u, u, &y.at(b, d * u));
    }
  }

  if (rc) {
    rc->input = x;
    rc->mask = std::move(mask);
    *cache = std::move(rc);
  }
  if (!spec_.return_sequences) state.mask.reset();
  return y;
}

Tensor RecurrentLayer::backward(const Tensor& grad_out, const LayerCache& cache) {
  const auto* rc = dynamic_cast<const RecurrentCache*>(&cache);
  if (!rc) throw std::logic_error("layer cache type mismatch");
  const Tensor& x = rc->input;
  const std::size_t batch = x.dim(0);
  const std::size_t steps = x.dim(1);
  const std::size_t u = spec_.units;
  const std::size_t gu = gates() * u;
  const bool gru = spec_.cell == CellType::gru;

  Tensor dx(x.shape());
  std::vector<double> xt(batch * in_);
  std::vector<double> dpre(batch * gu);
  std::vector<double> dh_prev(batch * u);
  std::vector<double> dc_prev(gru ? 0 : batch * u);
  std::vector<double> d_rh(batch * u);
  std::vector<double> rh(batch * u);
  std::vector<double> dxt(batch * in_);

  for (std::size_t d = 0; d < dirs_.size(); ++d) {
    Direction& dir = dirs_[d];
    const double* W = dir.kernel.value.raw();
    const double* U = dir.recurrent.value.raw();
    std::vector<double> dh(batch * u, 0.0);
    std::vector<double> dc(gru ? 0 : batch * u, 0.0);
    if (!spec_.return_sequences) {
      for (std::size_t b = 0; b < batch; ++b) {
        for (std::size_t j = 0; j < u; ++j) dh[b * u + j] = grad_out.at(b, d * u + j);
      }
    }

    const auto& cached = rc->steps[d];
    for (std::size_t s = cached.size(); s-- > 0;) {
      const StepCache& sc = cached[s];
      const std::size_t t = sc.t;
      if (spec_.return_sequences) {
        for (std::size_t b = 0; b < batch; ++b) {
          if (!rc->mask[b * steps + t]) continue;
          for (std::size_t j = 0; j < u; ++j) dh[b * u + j] += grad_out.at(b, t, d * u + j);
        }
      }
      std::fill(dpre.begin(), dpre.end(), 0.0);

      if (gru) {
        std::fill(d_rh.begin(), d_rh.end(), 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
          const bool live = rc->mask[b * steps + t];
          for (std::size_t j = 0; j < u; ++j) {
            const std::size_t k = b * u + j;
            const double* a = sc.act.data() + b * gu;
            const double z = a[j];
            const double r = a[u + j];
            const double hh = a[2 * u + j];
            rh[k] = r * sc.h_prev[k];
            if (!live) {
              dh_prev[k] = dh[k];
              continue;
            }
            const double dhh = dh[k] * (1.0 - z);
            const double dz = dh[k] * (sc.h_prev[k] - hh);
            dh_prev[k] = dh[k] * z;
            dpre[b * gu + j] = dz * z * (1.0 - z);
            dpre[b * gu + 2 * u + j] = dhh * (1.0 - hh * hh);
          }
        }
        // Candidate path through (r * h) Uh.
        std::vector<double> da(batch * u);
        for (std::size_t b = 0; b < batch; ++b) std::copy_n(dpre.data() + b * gu + 2 * u, u, da.data() + b * u);
        mul_cols_t_add(da.data(), U, gu, 2 * u, d_rh.data(), batch, u, u);
        for (std::size_t b = 0; b < batch; ++b) {
          if (!rc->mask[b * steps + t]) continue;
          for (std::size_t j = 0; j < u; ++j) {
            const std::size_t k = b * u + j;
            const double r = sc.act[b * gu + u + j];
            dh_prev[k] += d_rh[k] * r;
            dpre[b * gu + u + j] = d_rh[k] * sc.h_prev[k] * r * (1.0 - r);
          }
        }
        // z and r paths through h U.
        std::vector<double> dzr(batch * 2 * u);
        for (std::size_t b = 0; b < batch; ++b) std::copy_n(dpre.data() + b * gu, 2 * u, dzr.data() + b * 2 * u);
        mul_cols_t_add(dzr.data(), U, gu, 0, dh_prev.data(), batch, 2 * u, u);
        mul_t_cols_add(sc.h_prev.data(), dzr.data(), dir.recurrent.grad.raw(), gu, 0, batch, u, 2 * u);
        mul_t_cols_add(rh.data(), da.data(), dir.recurrent.grad.raw(), gu, 2 * u, batch, u, u);
      } else {
        for (std::size_t b = 0; b < batch; ++b) {
          const bool live = rc->mask[b * steps + t];
          for (std::size_t j = 0; j < u; ++j) {
            const std::size_t k = b * u + j;
            if (!live) {
              dh_prev[k] = dh[k];
              dc_prev[k] = dc[k];
              continue;
            }
            const double* a = sc.act.data() + b * gu;
            const double i = a[j];
            const double f = a[u + j];
            const double g = a[2 * u + j];
            const double o = a[3 * u + j];
            const double tc = std::tanh(sc.c_new[k]);
            const double d_o = dh[k] * tc;
            const double dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
            dpre[b * gu + j] = dct * g * i * (1.0 - i);
            dpre[b * gu + u + j] = dct * sc.c_prev[k] * f * (1.0 - f);
            dpre[b * gu + 2 * u + j] = dct * i * (1.0 - g * g);
            dpre[b * gu + 3 * u + j] = d_o * o * (1.0 - o);
            dc_prev[k] = dct * f;
            dh_prev[k] = 0.0;
          }
        }
        gemm_a_bt_add(dpre.data(), U, dh_prev.data(), batch, gu, u);
        gemm_at_b_add(sc.h_prev.data(), dpre.data(), dir.recurrent.grad.raw(), batch, u, gu);
      }

      for (std::size_t b = 0; b < batch; ++b) {
        std::copy_n(x.raw() + (b * steps + t) * in_, in_, xt.data() + b * in_);
        for (std::size_t j = 0; j < gu; ++j) dir.bias.grad[j] += dpre[b * gu + j];
      }
      gemm_at_b_add(xt.data(), dpre.data(), dir.kernel.grad.raw(), batch, in_, gu);
      std::fill(dxt.begin(), dxt.end(), 0.0);
      gemm_a_bt_add(dpre.data(), W, dxt.data(), batch, gu, in_);
      for (std::size_t b = 0; b < batch; ++b) {
        double* out = dx.raw() + (b * steps + t) * in_;
        for (std::size_t j = 0; j < in_; ++j) out[j] += dxt[b * in_ + j];
      }
      dh.swap(dh_prev);
      if (!gru) dc.swap(dc_prev);
    }
  }
  return dx;
}

}  // namespace eraclass
