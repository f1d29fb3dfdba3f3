#pragma once

#include <cstddef>
#include <vector>

#include "paintlab/unet.hpp"

namespace paintlab {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
  std::size_t step = 0;

  static AdamState init(const ParameterSet& params, AdamConfig config = {});
};

/// One bias-corrected Adam update in place. Throws NumericalError naming the
/// parameter on a non-finite gradient (before touching any parameter).
void adam_step(AdamState& state, ParameterSet& params, const std::vector<std::vector<double>>& grads);

}  // namespace paintlab
