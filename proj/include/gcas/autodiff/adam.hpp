#pragma once

#include <cmath>
#include <cstdint>

#include "gcas/autodiff/parameters.hpp"

namespace gcas {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;

  AdamState() = default;
  explicit AdamState(const ParameterStore& params) {
    for (const auto& p : params.tensors()) {
      m.emplace_back(p.shape, 0.0);
      v.emplace_back(p.shape, 0.0);
    }
  }
};

/// Bias-corrected Adam update applied in place.
inline void adam_step(AdamState& state, ParameterStore& params, const Gradients& grads,
                      const AdamConfig& cfg = {}) {
  if (state.m.size() != params.size() || grads.size() != params.size()) {
    throw ShapeError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(grads.size()) + " gradients and " +
                     std::to_string(state.m.size()) + " moment slots");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].shape != params[i].shape || state.m[i].shape != params[i].shape) {
      throw ShapeError("adam_step: parameter " + params.name(i) + " has shape " +
                       shape_string(params[i].shape) + ", gradient " +
                       shape_string(grads[i].shape));
    }
  }
  state.t += 1;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].values;
    auto& m = state.m[i].values;
    auto& v = state.v[i].values;
    const auto& g = grads[i].values;
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = cfg.beta1 * m[j] + (1.0 - cfg.beta1) * g[j];
      v[j] = cfg.beta2 * v[j] + (1.0 - cfg.beta2) * g[j] * g[j];
      const double m_hat = m[j] / c1;
      const double v_hat = v[j] / c2;
      p[j] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

}  // namespace gcas
