#include "paintlab/losses.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "paintlab/error.hpp"
#include "paintlab/ops.hpp"

namespace paintlab {

Tensor l1(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape())
    throw ShapeError("l1 operands differ: " + to_string(a.shape()) + " vs " + to_string(b.shape()));
  return mean(abs(a - b));
}

Tensor tv(const Tensor& k) {
  if (k.rank() != 4 || k.dim(2) < 2 || k.dim(3) < 2)
    throw ShapeError("tv expects [1,C,H,W] with H,W >= 2, got " + to_string(k.shape()));
  const std::size_t c = k.dim(1), h = k.dim(2), w = k.dim(3);
  const auto x = k.data();
  const double count = static_cast<double>(c * h * w);
  double total = 0.0;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double* p = x.data() + ch * h * w;
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t i = 0; i + 1 < w; ++i) total += std::abs(p[y * w + i + 1] - p[y * w + i]);
    for (std::size_t y = 0; y + 1 < h; ++y)
      for (std::size_t i = 0; i < w; ++i) total += std::abs(p[(y + 1) * w + i] - p[y * w + i]);
  }
  return Tape::record(Tensor::scalar(total / count), {&k}, [k, c, h, w, count](std::span<const double> go, Tape& tape) {
    const std::span<double> gk = tape.grad_slot(k);
    const auto x = k.data();
    const double scale = go[0] / count;
    const auto sign = [](double d) { return d > 0.0 ? 1.0 : d < 0.0 ? -1.0 : 0.0; };
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* p = x.data() + ch * h * w;
      double* g = gk.data() + ch * h * w;
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t i = 0; i + 1 < w; ++i) {
          const double s = scale * sign(p[y * w + i + 1] - p[y * w + i]);
          g[y * w + i + 1] += s;
          g[y * w + i] -= s;
        }
      for (std::size_t y = 0; y + 1 < h; ++y)
        for (std::size_t i = 0; i < w; ++i) {
          const double s = scale * sign(p[(y + 1) * w + i] - p[y * w + i]);
          g[(y + 1) * w + i] += s;
          g[y * w + i] -= s;
        }
    }
  });
}

void SdsSchedule::validate() const {
  auto check = [](double lo, double hi, const char* which) {
    if (!(lo >= 0.0 && lo < hi && hi <= 1.0))
      throw ConfigError(std::string("schedule ") + which + " window needs 0 <= t_min < t_max <= 1");
  };
  check(t_min_start, t_max_start, "start");
  check(t_min_end, t_max_end, "end");
  if (total_iters == 0) throw ConfigError("schedule total_iters must be positive");
  if (!(noise_scale >= 0.0)) throw ConfigError("schedule noise_scale must be non-negative");
}

std::pair<double, double> SdsSchedule::window(std::size_t iter) const {
  const double f = total_iters > 1 ? static_cast<double>(std::min(iter, total_iters - 1)) /
                                         static_cast<double>(total_iters - 1)
                                   : 0.0;
  return {t_min_start + f * (t_min_end - t_min_start), t_max_start + f * (t_max_end - t_max_start)};
}

double sds_noise_level(double t) {
  const double c = std::cos(std::numbers::pi * t / 2.0);
  const double abar = c * c;
  return std::sqrt(1.0 - abar) / std::sqrt(abar);
}

SdsDraw draw_sds(const SdsSchedule& sched, std::size_t iter, std::size_t count, std::uint64_t seed) {
  sched.validate();
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iter), static_cast<std::uint32_t>(0x5d5)};
  std::mt19937_64 rng(seq);
  const auto [lo, hi] = sched.window(iter);
  SdsDraw d;
  d.t = std::uniform_real_distribution<double>(lo, hi)(rng);
  d.level = sds_noise_level(d.t);
  d.epsilon.resize(count);
  std::normal_distribution<double> normal;
  for (double& e : d.epsilon) e = normal(rng);
  return d;
}

std::vector<std::vector<double>> sds_surrogate(std::span<const Tensor> images, std::span<const Tensor> targets,
                                               const SdsDraw& draw, double noise_scale) {
  if (images.size() != targets.size()) throw ShapeError("sds_surrogate needs one target per view");
  std::vector<std::vector<double>> out;
  for (std::size_t v = 0; v < images.size(); ++v) {
    if (images[v].shape() != images[0].shape() || targets[v].shape() != images[v].shape())
      throw ShapeError("sds_surrogate views and targets must share one shape");
    if (draw.epsilon.size() != images[v].numel()) throw ShapeError("sds_surrogate noise does not match image size");
    const auto x = images[v].data(), y = targets[v].data();
    std::vector<double> g(x.size());
    const double k = noise_scale * draw.level;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = (x[i] - y[i]) + k * draw.epsilon[i];
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::vector<double>> sds_surrogate(std::span<const Tensor> images, std::span<const Tensor> targets,
                                               std::size_t iter, const SdsSchedule& sched, std::uint64_t seed) {
  if (images.empty()) throw ShapeError("sds_surrogate needs at least one view");
  return sds_surrogate(images, targets, draw_sds(sched, iter, images[0].numel(), seed), sched.noise_scale);
}

}  // namespace paintlab
