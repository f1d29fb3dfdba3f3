#include "paintlab/unet.hpp"

#include <cmath>
#include <random>

#include "paintlab/error.hpp"
#include "paintlab/ops.hpp"

namespace paintlab {

std::size_t count_scalars(const ParameterSet& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += p.value.numel();
  return n;
}

std::vector<Tensor> bind(const ParameterSet& params, Tape& tape) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(tape.variable(p.value));
  return out;
}

std::vector<Tensor> values(const ParameterSet& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.value);
  return out;
}

void UNetConfig::validate(std::size_t height, std::size_t width) const {
  if (levels < 1) throw ConfigError("unet.levels must be >= 1");
  if (down_channels.size() != levels) {
    throw ConfigError("unet.down_channels must have " + std::to_string(levels) + " entries");
  }
  if (skip_channels.size() != levels) {
    throw ConfigError("unet.skip_channels must have " + std::to_string(levels) + " entries");
  }
  if (kernel % 2 == 0) throw ConfigError("unet.kernel must be odd");
  if (!(slope >= 0.0 && slope < 1.0)) throw ConfigError("unet.slope must lie in [0,1)");
  for (std::size_t c : down_channels)
    if (c == 0) throw ConfigError("unet.down_channels entries must be positive");
  const std::size_t multiple = std::size_t{1} << levels;
  if (height == 0 || width == 0 || height % multiple != 0 || width % multiple != 0) {
    throw ConfigError("texture size " + std::to_string(height) + "x" + std::to_string(width) +
                      " must be a multiple of " + std::to_string(multiple) + " for " +
                      std::to_string(levels) + " levels");
  }
}

namespace {

enum class Fill { kHeUniform, kZero, kOne };

// Walks the network once. `fetch(name, shape, fill, fan_in)` supplies each
// parameter in traversal order, so creation and evaluation share one layout.
template <class Fetch>
Tensor run_network(const UNetConfig& cfg, const Tensor& z, Fetch&& fetch) {
  auto conv = [&](const Tensor& x, const std::string& name, std::size_t cout, std::size_t k,
                  std::size_t stride) {
    const std::size_t cin = x.dim(1);
    const Tensor w = fetch(name + ".weight", Shape{cout, cin, k, k}, Fill::kHeUniform, cin * k * k);
    const Tensor b = fetch(name + ".bias", Shape{cout}, Fill::kZero, 0);
    return conv2d(x, w, b, stride, k / 2);
  };
  auto norm = [&](const Tensor& x, const std::string& name) {
    const std::size_t c = x.dim(1);
    const Tensor g = fetch(name + ".gain", Shape{c}, Fill::kOne, 0);
    const Tensor s = fetch(name + ".shift", Shape{c}, Fill::kZero, 0);
    return channel_norm(x, g, s);
  };
  auto act = [&](const Tensor& x) { return leaky_relu(x, cfg.slope); };

  auto level = [&](auto&& self, const Tensor& x, std::size_t i) -> Tensor {
    const std::string tag = "level" + std::to_string(i);
    const std::size_t width = cfg.down_channels[i];
    const bool has_skip = cfg.skip_enabled && cfg.skip_channels[i] > 0;

    Tensor skip;
    if (has_skip) skip = act(norm(conv(x, tag + ".skip", cfg.skip_channels[i], 1, 1), tag + ".skip_norm"));

    Tensor y = act(norm(conv(x, tag + ".down1", width, cfg.kernel, 2), tag + ".down1_norm"));
    y = act(norm(conv(y, tag + ".down2", width, cfg.kernel, 1), tag + ".down2_norm"));
    if (i + 1 < cfg.levels) y = self(self, y, i + 1);
    y = upsample_nearest(y, 2);
    if (has_skip) {
      const Tensor parts[] = {skip, y};
      y = concat_channels(parts);
    }
    y = norm(y, tag + ".merge_norm");
    y = act(norm(conv(y, tag + ".up", width, cfg.kernel, 1), tag + ".up_norm"));
    y = act(norm(conv(y, tag + ".up1x1", width, 1, 1), tag + ".up1x1_norm"));
    return y;
  };

  const Tensor features = level(level, z, 0);
  return conv(features, "head", cfg.output_channels, 1, 1);
}

}  // namespace

UNet UNet::init(const UNetConfig& cfg, std::size_t height, std::size_t width) {
  cfg.validate(height, width);
  UNet net;
  net.cfg_ = cfg;

  std::mt19937_64 noise_rng(cfg.seed + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> z(cfg.input_channels * height * width);
  for (double& v : z) v = normal(noise_rng);
  net.z_ = Tensor({1, cfg.input_channels, height, width}, std::move(z));

  std::mt19937_64 rng(cfg.seed);
  run_network(cfg, net.z_, [&](const std::string& name, const Shape& shape, Fill fill,
                                std::size_t fan_in) {
    std::vector<double> v(numel(shape), fill == Fill::kOne ? 1.0 : 0.0);
    if (fill == Fill::kHeUniform) {
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
      std::uniform_real_distribution<double> uniform(-bound, bound);
      for (double& x : v) x = uniform(rng);
    }
    Tensor t(shape, std::move(v));
    net.params_.push_back({name, t});
    return t;
  });
  return net;
}

Tensor UNet::forward(std::span<const Tensor> params) const {
  if (params.size() != params_.size()) {
    throw ShapeError("unet forward expects " + std::to_string(params_.size()) +
                     " parameter tensors, got " + std::to_string(params.size()));
  }
  std::size_t cursor = 0;
  return run_network(cfg_, z_, [&](const std::string& name, const Shape& shape, Fill,
                                   std::size_t) -> Tensor {
    const Tensor& t = params[cursor++];
    if (t.shape() != shape) {
      throw ShapeError("parameter " + name + " has shape " + to_string(t.shape()) +
                       ", expected " + to_string(shape));
    }
    return t;
  });
}

Tensor UNet::forward() const {
  const auto v = values(params_);
  return forward(v);
}

}  // namespace paintlab
