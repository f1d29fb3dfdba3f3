#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "paintlab/adam.hpp"
#include "paintlab/camera.hpp"
#include "paintlab/losses.hpp"
#include "paintlab/shading.hpp"
#include "paintlab/spectrum.hpp"
#include "paintlab/texture.hpp"
#include "paintlab/unet.hpp"

namespace paintlab {

enum class FitKind { pixel, reparam, reparam_noskip };
enum class SynthKind { pixel_tv, dcpbr };

std::string to_string(FitKind kind);
std::string to_string(SynthKind kind);
FitKind parse_fit_kind(const std::string& name);
SynthKind parse_synth_kind(const std::string& name);

struct Snapshot {
  std::size_t iter = 0;  // optimizer steps taken
  double loss = 0.0;
  TextureSet texture;
};

struct Trajectory {
  std::vector<Snapshot> snapshots;
  BandTrace trace;  // diffuse-map band energies per snapshot
};

/// Called after every snapshot, for progress output.
using SnapshotHook = std::function<void(const Snapshot&)>;

struct FitConfig {
  std::size_t iterations = 1000;
  std::size_t snapshot_every = 10;
  std::uint64_t seed = 0;
  double lr_pixel = 1e-2;
  double lr_net = 2e-2;
  double pixel_init_std = 0.1;  // raw pixel init ~ N(0, std^2)
  UNetConfig net;               // seed and skip flag are overridden per run

  void validate() const;
};

/// Minimizes the L1 distance between all eight decoded channels and the
/// target. Snapshots at iterations 0, k, 2k, ... and the final iteration.
Trajectory optimize_fit(FitKind kind, const TextureSet& target, const FitConfig& cfg,
                        const SnapshotHook& hook = {});

struct SynthConfig {
  std::size_t iterations = 500;
  std::size_t snapshot_every = 10;
  std::uint64_t seed = 0;
  std::size_t pool_size = 16;
  std::size_t views_per_iter = 4;
  double lambda_tv = 0.1;
  double lr_pixel = 1e-1;
  double lr_net = 5e-3;
  double pixel_init_std = 0.1;
  SdsSchedule schedule;  // total_iters is forced to `iterations`
  Camera camera;         // distance, fov and resolution of every view
  UNetConfig net;

  void validate() const;
};

/// The fixed view pool: cameras, their G-buffers, and the display-space
/// renders of the reference texture that stand in for text conditioning.
struct SynthScene {
  std::vector<Camera> cameras;
  std::vector<GBuffer> gbuffers;
  std::vector<Tensor> targets;
  EnvLight env;
};

SynthScene prepare_scene(const Mesh& mesh, const EnvLight& env, const TextureSet& reference,
                         const SynthConfig& cfg);

struct SynthResult {
  Trajectory trajectory;
  double final_render_l1 = 0.0;  // mean over the whole pool
};

/// Surrogate-SDS texture synthesis. Snapshot loss is the mean render L1 of
/// the views drawn at that step.
SynthResult optimize_synth(SynthKind kind, const SynthScene& scene, const SynthConfig& cfg,
                           const SnapshotHook& hook = {});

/// Display-space renders of `tex` for every view of the scene.
std::vector<Tensor> render_views(const TextureSet& tex, const SynthScene& scene);
/// Mean L1 between display renders of `tex` and the scene targets.
double render_l1(const TextureSet& tex, const SynthScene& scene);

}  // namespace paintlab
