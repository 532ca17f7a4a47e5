#pragma once

#include <cstdint>
#include <vector>

#include "perfquant/stnet/model.hpp"

namespace perfquant::stnet {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First and second moment estimates, one buffer per parameter tensor.
struct AdamState {
  std::vector<std::vector<double>> m, v;
  std::int64_t t = 0;
};

/// Bias-corrected Adam update of raw tensors (used directly by tests).
void adam_step(std::vector<Tensor*> params, AdamState& state, const AdamConfig& cfg);

/// Applies one update using the accumulated gradients of `model`.
void adam_step(ModelParams& model, AdamState& state, const AdamConfig& cfg);

}  // namespace perfquant::stnet
