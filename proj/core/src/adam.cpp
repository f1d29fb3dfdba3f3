#include "paintlab/adam.hpp"

#include <cmath>
#include <string>

#include "paintlab/error.hpp"

namespace paintlab {

AdamState AdamState::init(const ParameterSet& params, AdamConfig config) {
  if (!(config.lr > 0.0) || !(config.beta1 >= 0.0 && config.beta1 < 1.0) ||
      !(config.beta2 >= 0.0 && config.beta2 < 1.0) || !(config.eps > 0.0))
    throw ConfigError("adam needs lr > 0, betas in [0,1), eps > 0");
  AdamState s;
  s.config = config;
  for (const Parameter& p : params) {
    s.m.emplace_back(p.value.numel(), 0.0);
    s.v.emplace_back(p.value.numel(), 0.0);
  }
  return s;
}

void adam_step(AdamState& state, ParameterSet& params, const std::vector<std::vector<double>>& grads) {
  if (grads.size() != params.size() || state.m.size() != params.size())
    throw ShapeError("adam: parameter, gradient and state counts differ");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].size() != params[i].value.numel() || state.m[i].size() != grads[i].size())
      throw ShapeError("adam: gradient of " + params[i].name + " has the wrong size");
    for (std::size_t j = 0; j < grads[i].size(); ++j)
      if (!std::isfinite(grads[i][j]))
        throw NumericalError("non-finite gradient in parameter " + params[i].name + " at element " +
                             std::to_string(j));
  }
  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correct1 = 1.0 - std::pow(c.beta1, t);
  const double correct2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    std::vector<double> value = params[i].value.to_vector();
    std::vector<double>& m = state.m[i];
    std::vector<double>& v = state.v[i];
    for (std::size_t j = 0; j < value.size(); ++j) {
      const double g = grads[i][j];
      m[j] = c.beta1 * m[j] + (1.0 - c.beta1) * g;
      v[j] = c.beta2 * v[j] + (1.0 - c.beta2) * g * g;
      value[j] -= c.lr * (m[j] / correct1) / (std::sqrt(v[j] / correct2) + c.eps);
    }
    params[i].value = Tensor(params[i].value.shape(), std::move(value));
  }
}

}  // namespace paintlab
