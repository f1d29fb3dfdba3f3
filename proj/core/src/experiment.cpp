#include "paintlab/experiment.hpp"

#include <algorithm>
#include <random>

#include "paintlab/error.hpp"
#include "paintlab/ops.hpp"

namespace paintlab {
namespace {

std::unique_ptr<TextureParameterization> make_pixels(std::size_t h, std::size_t w, double std_dev,
                                                     std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std_dev);
  std::vector<double> raw(kHeadChannels * h * w);
  if (std_dev > 0.0)
    for (double& v : raw) v = normal(rng);
  return std::make_unique<PixelParameterization>(PixelParams{Tensor({1, kHeadChannels, h, w}, raw)});
}

std::unique_ptr<TextureParameterization> make_network(UNetConfig net, bool skips, std::uint64_t seed,
                                                      std::size_t h, std::size_t w) {
  net.seed = seed;
  net.skip_enabled = skips;
  return std::make_unique<NetworkParameterization>(UNet::init(net, h, w));
}

std::vector<std::vector<double>> gradients(const Tape& tape, const std::vector<Tensor>& bound) {
  std::vector<std::vector<double>> g;
  g.reserve(bound.size());
  for (const Tensor& b : bound) g.push_back(tape.grad(b));
  return g;
}

bool snapshot_due(std::size_t iter, std::size_t every, std::size_t total) {
  return iter % every == 0 || iter == total;
}

void record(Trajectory& traj, std::size_t iter, double loss, const TextureSet& tex, const SnapshotHook& hook) {
  Snapshot s{iter, loss, tex.detach()};
  traj.trace.push(iter, band_energies(s.texture.diffuse));
  traj.snapshots.push_back(std::move(s));
  if (hook) hook(traj.snapshots.back());
}

}  // namespace

std::string to_string(FitKind kind) {
  switch (kind) {
    case FitKind::pixel: return "pixel";
    case FitKind::reparam: return "reparam";
    case FitKind::reparam_noskip: return "reparam_noskip";
  }
  return "?";
}

std::string to_string(SynthKind kind) { return kind == SynthKind::pixel_tv ? "pixel_tv" : "dcpbr"; }

FitKind parse_fit_kind(const std::string& name) {
  if (name == "pixel") return FitKind::pixel;
  if (name == "reparam") return FitKind::reparam;
  if (name == "reparam_noskip") return FitKind::reparam_noskip;
  throw ConfigError("param_kind '" + name + "' is not one of pixel, reparam, reparam_noskip");
}

SynthKind parse_synth_kind(const std::string& name) {
  if (name == "pixel_tv") return SynthKind::pixel_tv;
  if (name == "dcpbr") return SynthKind::dcpbr;
  throw ConfigError("param_kind '" + name + "' is not one of pixel_tv, dcpbr");
}

void FitConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (snapshot_every == 0) throw ConfigError("snapshot_every must be positive");
  if (!(lr_pixel > 0.0) || !(lr_net > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(pixel_init_std >= 0.0)) throw ConfigError("pixel_init_std must be non-negative");
}

Trajectory optimize_fit(FitKind kind, const TextureSet& target, const FitConfig& cfg, const SnapshotHook& hook) {
  cfg.validate();
  const std::size_t h = target.height(), w = target.width();
  std::unique_ptr<TextureParameterization> param;
  AdamConfig adam;
  if (kind == FitKind::pixel) {
    param = make_pixels(h, w, cfg.pixel_init_std, cfg.seed);
    adam.lr = cfg.lr_pixel;
  } else {
    param = make_network(cfg.net, kind == FitKind::reparam, cfg.seed, h, w);
    adam.lr = cfg.lr_net;
  }
  const Tensor goal = stack_channels(target.detach());
  AdamState state = AdamState::init(param->parameters(), adam);

  Trajectory traj;
  for (std::size_t iter = 0;; ++iter) {
    Tape tape;
    const std::vector<Tensor> bound = paintlab::bind(param->parameters(), tape);
    const TextureSet tex = param->decode(bound);
    const Tensor loss = l1(stack_channels(tex), goal);
    if (snapshot_due(iter, cfg.snapshot_every, cfg.iterations)) record(traj, iter, loss.item(), tex, hook);
    if (iter == cfg.iterations) break;
    tape.backward(loss);
    adam_step(state, param->parameters(), gradients(tape, bound));
  }
  return traj;
}

void SynthConfig::validate() const {
  if (iterations == 0) throw ConfigError("iterations must be positive");
  if (snapshot_every == 0) throw ConfigError("snapshot_every must be positive");
  if (pool_size == 0 || views_per_iter == 0 || views_per_iter > pool_size)
    throw ConfigError("views_per_iter must lie in [1, pool_size]");
  if (!(lambda_tv >= 0.0)) throw ConfigError("lambda_tv must be non-negative");
  if (!(lr_pixel > 0.0) || !(lr_net > 0.0)) throw ConfigError("learning rates must be positive");
  SdsSchedule s = schedule;
  s.total_iters = iterations;
  s.validate();
  camera.validate();
}

SynthScene prepare_scene(const Mesh& mesh, const EnvLight& env, const TextureSet& reference,
                         const SynthConfig& cfg) {
  cfg.validate();
  SynthScene scene;
  scene.env = env;
  // The pool depends on the seed only, so both parameterizations see the same views.
  scene.cameras = sample_cameras(cfg.pool_size, PoseRule::full_body, cfg.seed ^ 0x9e3779b97f4a7c15ULL, cfg.camera);
  for (const Camera& c : scene.cameras) {
    scene.gbuffers.push_back(rasterize(mesh, c));
    scene.targets.push_back(tonemap(shade(reference.detach(), scene.gbuffers.back(), env)));
  }
  return scene;
}

std::vector<Tensor> render_views(const TextureSet& tex, const SynthScene& scene) {
  std::vector<Tensor> out;
  for (const GBuffer& g : scene.gbuffers) out.push_back(tonemap(shade(tex.detach(), g, scene.env)));
  return out;
}

double render_l1(const TextureSet& tex, const SynthScene& scene) {
  const auto views = render_views(tex, scene);
  double total = 0.0;
  for (std::size_t v = 0; v < views.size(); ++v) total += l1(views[v], scene.targets[v]).item();
  return total / static_cast<double>(views.size());
}

SynthResult optimize_synth(SynthKind kind, const SynthScene& scene, const SynthConfig& cfg, const SnapshotHook& hook) {
  cfg.validate();
  if (scene.gbuffers.size() != cfg.pool_size) throw ConfigError("scene pool size differs from the config");
  SdsSchedule sched = cfg.schedule;
  sched.total_iters = cfg.iterations;
  const std::size_t res = cfg.camera.resolution;
  const std::size_t tex_size = res;  // texture resolution matches the render resolution

  std::unique_ptr<TextureParameterization> param;
  AdamConfig adam;
  if (kind == SynthKind::pixel_tv) {
    param = make_pixels(tex_size, tex_size, cfg.pixel_init_std, cfg.seed);
    adam.lr = cfg.lr_pixel;
  } else {
    param = make_network(cfg.net, true, cfg.seed, tex_size, tex_size);
    adam.lr = cfg.lr_net;
  }
  AdamState state = AdamState::init(param->parameters(), adam);

  std::vector<std::size_t> order(cfg.pool_size);
  SynthResult result;
  for (std::size_t iter = 0;; ++iter) {
    Tape tape;
    const std::vector<Tensor> bound = paintlab::bind(param->parameters(), tape);
    const TextureSet tex = param->decode(bound);

    if (iter == cfg.iterations) {
      record(result.trajectory, iter, render_l1(tex, scene), tex, hook);
      break;
    }
    std::seed_seq seq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                      static_cast<std::uint32_t>(iter), 0x71e3u};
    std::mt19937_64 rng(seq);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng);

    std::vector<Tensor> images, targets;
    double loss = 0.0;
    for (std::size_t k = 0; k < cfg.views_per_iter; ++k) {
      const std::size_t v = order[k];
      images.push_back(tonemap(shade(tex, scene.gbuffers[v], scene.env)));
      targets.push_back(scene.targets[v]);
      loss += l1(images.back().detach(), targets.back()).item() / static_cast<double>(cfg.views_per_iter);
    }
    if (snapshot_due(iter, cfg.snapshot_every, cfg.iterations)) record(result.trajectory, iter, loss, tex, hook);

    auto grads = sds_surrogate(images, targets, iter, sched, cfg.seed);
    std::vector<GradientSeed> seeds;
    for (std::size_t k = 0; k < images.size(); ++k) seeds.push_back({images[k], std::move(grads[k])});
    if (kind == SynthKind::pixel_tv && cfg.lambda_tv > 0.0) seeds.push_back({tv(tex.diffuse), {cfg.lambda_tv}});
    tape.backward(seeds);
    adam_step(state, param->parameters(), gradients(tape, bound));
  }
  result.final_render_l1 = result.trajectory.snapshots.back().loss;
  return result;
}

}  // namespace paintlab
