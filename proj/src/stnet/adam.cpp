#include "perfquant/stnet/adam.hpp"

#include <cmath>

#include "perfquant/error.hpp"

namespace perfquant::stnet {

void adam_step(std::vector<Tensor*> params, AdamState& state, const AdamConfig& cfg) {
  if (state.m.empty()) {
    for (const Tensor* p : params) {
      state.m.emplace_back(p->size(), 0.0);
      state.v.emplace_back(p->size(), 0.0);
    }
  }
  require(state.m.size() == params.size(), ErrorKind::precondition, "optimizer state does not match parameters");
  ++state.t;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    Tensor& p = *params[k];
    p.enable_grad();
    auto g = p.grad();
    auto& m = state.m[k];
    auto& v = state.v[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

void adam_step(ModelParams& model, AdamState& state, const AdamConfig& cfg) {
  std::vector<Tensor*> params;
  for (auto& p : model.parameters()) params.push_back(p.second);
  adam_step(std::move(params), state, cfg);
}

}  // namespace perfquant::stnet
