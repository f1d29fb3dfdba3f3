#include "lab/commands.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

#include "paintlab/coherence.hpp"
#include "paintlab/error.hpp"
#include "paintlab/experiment.hpp"
#include "paintlab/image.hpp"
#include "paintlab/parallel.hpp"
#include "paintlab/spectrum.hpp"
#include "paintlab/target.hpp"

#ifndef LAB_VERSION
#define LAB_VERSION "unknown"
#endif
#ifndef LAB_PNG_VERSION
#define LAB_PNG_VERSION "unknown"
#endif
#ifndef LAB_EIGEN_VERSION
#define LAB_EIGEN_VERSION "unknown"
#endif

namespace lab {
namespace fs = std::filesystem;
using namespace paintlab;

namespace {

constexpr double kDegree = std::numbers::pi / 180.0;

bool is_builtin_target(const std::string& name) { return name == "multiband" || name == "natural"; }
bool is_builtin_env(const std::string& name) { return name == "studio" || name == "white" || name == "black"; }

TextureSet load_texture(const LabConfig& cfg, const std::string& name, const std::string& field,
                        bool allow_gray) {
  if (is_builtin_target(name)) return builtin_target(name, cfg.resolution).texture;
  if (allow_gray && name == "gray") return decode_pixels(PixelParams::zeros(cfg.resolution, cfg.resolution));
  const fs::path dir = cfg.resolve(name);
  if (!fs::is_directory(dir))
    throw ConfigError("config field '" + field + "': '" + name + "' is neither a builtin texture nor a directory");
  for (const char* f : {"diffuse.png", "rough_metal.png", "normal.png"})
    if (!fs::exists(dir / f)) throw ConfigError("config field '" + field + "': missing " + (dir / f).string());
  TextureSet tex = read_texture_set(dir);
  if (tex.height() != cfg.resolution || tex.width() != cfg.resolution)
    throw ConfigError("config field '" + field + "': texture is " + std::to_string(tex.width()) + "x" +
                      std::to_string(tex.height()) + ", resolution is " + std::to_string(cfg.resolution));
  return tex;
}

NamedEnv load_env(const LabConfig& cfg, const std::string& name) {
  if (is_builtin_env(name)) return {name, build_env(builtin_env_image(name, cfg.env_width, cfg.env_height))};
  const fs::path p = cfg.resolve(name);
  if (!fs::is_regular_file(p)) throw ConfigError("config field 'envs': '" + name + "' is neither builtin nor a file");
  return {p.stem().string(), build_env(load_env_png(p))};
}

bool needs_scene(Command c) { return c != Command::fit && c != Command::freq; }

UNetConfig net_config(const LabConfig& cfg) {
  UNetConfig net;
  net.levels = cfg.levels;
  const std::vector<std::size_t> widths{16, 32, 64, 128, 128, 128, 128, 128};
  net.down_channels.assign(widths.begin(), widths.begin() + static_cast<std::ptrdiff_t>(cfg.levels));
  net.skip_channels.assign(cfg.levels, 4);
  return net;
}

Camera base_camera(const LabConfig& cfg) {
  Camera c;
  c.distance = cfg.distance;
  c.fov = cfg.fov_degrees * kDegree;
  c.resolution = cfg.resolution;
  return c;
}

json energies_json(const BandEnergies& e) { return json(std::vector<double>(e.begin(), e.end())); }

json iterations_json(const std::array<std::size_t, kBands>& t) {
  json out = json::array();
  for (std::size_t v : t) out.push_back(v == kNeverConverged ? json(nullptr) : json(v));
  return out;
}

double rank_correlation(const std::array<std::size_t, kBands>& t) {
  std::vector<double> band, value;
  for (std::size_t k = 0; k < kBands; ++k) {
    band.push_back(static_cast<double>(k + 1));
    value.push_back(t[k] == kNeverConverged ? std::numeric_limits<double>::max() : static_cast<double>(t[k]));
  }
  return spearman(band, value);
}

/// True when the band-5 trace, averaged over consecutive windows, never decreases.
bool smoothed_nondecreasing(const BandTrace& trace, std::size_t window) {
  double prev = -1.0;
  for (std::size_t start = 0; start + window <= trace.size(); start += window) {
    double mean = 0.0;
    for (std::size_t i = start; i < start + window; ++i) mean += trace.energies[i][kBands - 1];
    mean /= static_cast<double>(window);
    if (mean < prev) return false;
    prev = mean;
  }
  return true;
}

class Sink {
 public:
  explicit Sink(fs::path root) : root_(std::move(root)) {}

  fs::path file(const std::string& rel) {
    const fs::path p = root_ / rel;
    fs::create_directories(p.parent_path());
    files_.push_back(rel);
    return p;
  }
  void text(const std::string& rel, const std::string& body) {
    std::ofstream out(file(rel), std::ios::binary);
    out << body;
    if (!out) throw Error("cannot write " + (root_ / rel).string());
  }
  void json_file(const std::string& rel, const json& j) { text(rel, j.dump(2) + "\n"); }
  void png(const std::string& rel, const Image& img) { write_png(file(rel), img); }
  void textures(const std::string& rel_dir, const TextureSet& tex) {
    write_texture_set(root_ / rel_dir, tex);
    for (const char* f : {"diffuse.png", "rough_metal.png", "normal.png"}) files_.push_back(rel_dir + "/" + f);
  }
  void trace(const std::string& rel, const BandTrace& t) {
    std::ostringstream s;
    t.write_csv(s);
    text(rel, s.str());
  }
  void losses(const std::string& rel, const Trajectory& traj) {
    std::ostringstream s;
    s.precision(17);
    s << "iter,loss\n";
    for (const Snapshot& snap : traj.snapshots) s << snap.iter << ',' << snap.loss << '\n';
    text(rel, s.str());
  }

  std::vector<std::string> take() { return std::move(files_); }

 private:
  fs::path root_;
  std::vector<std::string> files_;
};

class Timer {
 public:
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return s;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

/// Diffuse maps of about ten evenly spaced snapshots, side by side.
Image snapshot_strip(const Trajectory& traj) {
  std::vector<Image> frames;
  const std::size_t n = traj.snapshots.size();
  const std::size_t step = std::max<std::size_t>(1, (n - 1) / 10);
  for (std::size_t i = 0; i < n; i += step) frames.push_back(to_image(traj.snapshots[i].texture.diffuse));
  if ((n - 1) % step != 0) frames.push_back(to_image(traj.snapshots.back().texture.diffuse));
  return hstack(frames);
}

std::vector<Camera> turntable(const LabConfig& cfg) {
  std::vector<Camera> cams;
  for (std::size_t k = 0; k < cfg.views; ++k) {
    Camera c = base_camera(cfg);
    c.elevation = cfg.elevation_degrees * kDegree;
    c.azimuth = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(cfg.views);
    cams.push_back(c);
  }
  return cams;
}

Image render_strip(const TextureSet& tex, const std::vector<GBuffer>& gbuffers, const EnvLight& env) {
  std::vector<Image> frames;
  for (const GBuffer& g : gbuffers) frames.push_back(to_image(tonemap(shade(tex, g, env))));
  return hstack(frames);
}

std::vector<GBuffer> rasterize_all(const Mesh& mesh, const std::vector<Camera>& cams) {
  std::vector<GBuffer> out;
  for (const Camera& c : cams) out.push_back(rasterize(mesh, c));
  return out;
}

std::string run_name(const std::string& kind, std::uint64_t seed) { return kind + "_seed" + std::to_string(seed); }

RunSummary cmd_fit(const LabConfig& cfg, const Inputs& in, Sink& sink) {
  RunSummary sum;
  Timer timer;
  const BandEnergies target_e = band_energies(in.target.diffuse);
  sum.metrics["target_band_energies"] = energies_json(target_e);
  sink.textures("target", in.target);

  FitConfig fc;
  fc.iterations = cfg.iterations;
  fc.snapshot_every = cfg.snapshot_every;
  fc.lr_pixel = *cfg.lr_pixel;
  fc.lr_net = *cfg.lr_net;
  fc.pixel_init_std = cfg.pixel_init_std;
  fc.net = net_config(cfg);

  std::ostringstream table;
  table.precision(17);
  table << "kind,seed,t1,t2,t3,t4,t5,spread,spearman,final_loss,band5_ratio\n";
  json runs = json::array();
  std::map<std::uint64_t, std::map<std::string, double>> spreads;
  for (const std::string& kind : cfg.param_kinds) {
    for (std::uint64_t seed : cfg.seeds) {
      fc.seed = seed;
      const Trajectory traj = optimize_fit(parse_fit_kind(kind), in.target, fc);
      const std::string name = run_name(kind, seed);
      sum.timings.emplace_back("fit " + name, timer.lap());
      sink.trace("fit/" + name + "/trace.csv", traj.trace);
      sink.losses("fit/" + name + "/loss.csv", traj);
      sink.png("fit/" + name + "/snapshots.png", snapshot_strip(traj));
      sink.textures("fit/" + name + "/texture", traj.snapshots.back().texture);

      const auto t = convergence_iterations(traj.trace, target_e);
      const double spread = convergence_spread(t, cfg.iterations);
      const double rho = rank_correlation(t);
      const double loss = traj.snapshots.back().loss;
      const double ratio = traj.trace.energies.back()[kBands - 1] / target_e[kBands - 1];
      spreads[seed][kind] = spread;
      table << kind << ',' << seed;
      for (std::size_t v : t) table << ',' << (v == kNeverConverged ? std::string("inf") : std::to_string(v));
      table << ',' << spread << ',' << rho << ',' << loss << ',' << ratio << '\n';
      runs.push_back({{"kind", kind},
                      {"seed", seed},
                      {"convergence_iterations", iterations_json(t)},
                      {"spread", spread},
                      {"spearman", rho},
                      {"low_before_high", t[0] < t[kBands - 1]},
                      {"final_loss", loss},
                      {"final_band_energies", energies_json(traj.trace.energies.back())},
                      {"band5_ratio", ratio}});
      std::cout << "fit " << name << ": loss " << loss << ", spread " << spread << ", spearman " << rho << "\n";
    }
  }
  sink.text("fit/convergence.csv", table.str());

  json comparison = json::array();
  for (const auto& [seed, by_kind] : spreads) {
    if (!by_kind.count("pixel") || !by_kind.count("reparam")) continue;
    const double p = by_kind.at("pixel"), r = by_kind.at("reparam");
    comparison.push_back({{"seed", seed},
                          {"pixel_spread", p},
                          {"reparam_spread", r},
                          {"pixel_fits_bands_together", p < r}});
  }
  sum.metrics["runs"] = runs;
  sum.metrics["comparison"] = comparison;
  sink.json_file("fit/summary.json", sum.metrics);
  return sum;
}

RunSummary cmd_synth(const LabConfig& cfg, const Inputs& in, Sink& sink) {
  RunSummary sum;
  Timer timer;
  const BandEnergies ref_e = band_energies(in.target.diffuse);
  sum.metrics["reference_band_energies"] = energies_json(ref_e);
  sink.textures("reference", in.target);

  SynthConfig sc;
  sc.iterations = cfg.iterations;
  sc.snapshot_every = cfg.snapshot_every;
  sc.pool_size = cfg.pool_size;
  sc.views_per_iter = cfg.views_per_iter;
  sc.lambda_tv = cfg.lambda_tv;
  sc.lr_pixel = *cfg.lr_pixel;
  sc.lr_net = *cfg.lr_net;
  sc.pixel_init_std = cfg.pixel_init_std;
  sc.schedule = cfg.schedule;
  sc.camera = base_camera(cfg);
  sc.net = net_config(cfg);

  const EnvLight& env = in.envs.front().light;
  const std::vector<GBuffer> table_views = rasterize_all(*in.mesh, turntable(cfg));
  json runs = json::array(), comparison = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    sc.seed = seed;
    const SynthScene scene = prepare_scene(*in.mesh, env, in.target, sc);
    std::vector<Image> target_frames;
    for (const Tensor& t : scene.targets) target_frames.push_back(to_image(t));
    sink.png("synth/targets_seed" + std::to_string(seed) + ".png", hstack(target_frames));
    sum.timings.emplace_back("scene seed " + std::to_string(seed), timer.lap());

    std::map<std::string, double> l1_by_kind;
    for (const std::string& kind : cfg.param_kinds) {
      const SynthResult res = optimize_synth(parse_synth_kind(kind), scene, sc);
      const std::string name = run_name(kind, seed);
      sum.timings.emplace_back("synth " + name, timer.lap());
      const Trajectory& traj = res.trajectory;
      sink.trace("synth/" + name + "/trace.csv", traj.trace);
      sink.losses("synth/" + name + "/loss.csv", traj);
      sink.png("synth/" + name + "/snapshots.png", snapshot_strip(traj));
      sink.textures("synth/" + name + "/texture", traj.snapshots.back().texture);
      sink.png("synth/" + name + "/turntable.png", render_strip(traj.snapshots.back().texture, table_views, env));

      double peak = 0.0;
      for (const auto& e : traj.trace.energies) peak = std::max(peak, e[kBands - 1] / ref_e[kBands - 1]);
      const double final_ratio = traj.trace.energies.back()[kBands - 1] / ref_e[kBands - 1];
      l1_by_kind[kind] = res.final_render_l1;
      runs.push_back({{"kind", kind},
                      {"seed", seed},
                      {"final_render_l1", res.final_render_l1},
                      {"final_band_energies", energies_json(traj.trace.energies.back())},
                      {"band5_ratio_final", final_ratio},
                      {"band5_ratio_peak", peak},
                      {"band5_smoothed_nondecreasing", smoothed_nondecreasing(traj.trace, 5)}});
      std::cout << "synth " << name << ": render L1 " << res.final_render_l1 << ", band-5 ratio " << final_ratio
                << "\n";
    }
    if (l1_by_kind.count("pixel_tv") && l1_by_kind.count("dcpbr"))
      comparison.push_back({{"seed", seed},
                            {"pixel_tv_render_l1", l1_by_kind["pixel_tv"]},
                            {"dcpbr_render_l1", l1_by_kind["dcpbr"]},
                            {"dcpbr_closer", l1_by_kind["dcpbr"] < l1_by_kind["pixel_tv"]}});
  }
  sum.metrics["runs"] = runs;
  sum.metrics["comparison"] = comparison;
  sink.json_file("synth/summary.json", sum.metrics);
  return sum;
}

RunSummary cmd_freq(const LabConfig& cfg, const Inputs& in, Sink& sink) {
  RunSummary sum;
  const Tensor& map = in.target.diffuse;
  const std::size_t h = map.dim(2), w = map.dim(3), c = map.dim(1);
  BandTrace trace;
  const BandEnergies e = band_energies(map);
  trace.push(0, e);
  sink.trace("freq/bands.csv", trace);

  std::vector<double> power(h * w, 0.0);
  const auto& data = map.data();
  for (std::size_t ch = 0; ch < c; ++ch) {
    const auto spec = fft2(std::span<const double>(data).subspan(ch * h * w, h * w), h, w);
    for (std::size_t i = 0; i < h * w; ++i) power[i] += std::norm(spec[i]);
  }
  double peak = 0.0;
  for (double& p : power) {
    p = std::log1p(std::sqrt(p));
    peak = std::max(peak, p);
  }
  Image magnitude(w, h, 1), bands(w, h, 1);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) {
      magnitude.at(y, x, 0) = peak > 0.0 ? power[y * w + x] / peak : 0.0;
      bands.at(y, x, 0) = static_cast<double>(band_index(y, x, h, w)) / static_cast<double>(kBands - 1);
    }
  sink.png("freq/spectrum.png", magnitude);
  sink.png("freq/band_mask.png", bands);

  double total = 0.0;
  for (double v : e) total += v;
  json fractions = json::array();
  for (double v : e) fractions.push_back(total > 0.0 ? v / total : 0.0);
  sum.metrics = {{"band_energies", energies_json(e)}, {"band_fractions", fractions}, {"texture", cfg.target}};
  sink.json_file("freq/summary.json", sum.metrics);
  return sum;
}

double mean_abs_diff(const Tensor& a, const Tensor& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) s += std::abs(a.data()[i] - b.data()[i]);
  return s / static_cast<double>(a.data().size());
}

RunSummary cmd_coherence(const LabConfig& cfg, const Inputs& in, Sink& sink) {
  RunSummary sum;
  Timer timer;
  CoherenceConfig cc;
  cc.views = cfg.views;
  cc.schedule = cfg.schedule;
  cc.schedule.total_iters = 1;
  cc.repeat_view = cfg.repeat_view;
  cc.camera = base_camera(cfg);
  json reports = json::array();
  for (std::uint64_t seed : cfg.seeds) {
    cc.seed = seed;
    const CoherenceResult res = gradient_coherence(*in.mesh, in.envs.front().light, in.target, *in.current, cc);
    sum.timings.emplace_back("coherence seed " + std::to_string(seed), timer.lap());
    const CoherenceReport& r = res.report;
    double max_mad = 0.0;
    for (std::size_t i = 0; i < res.renders.size(); ++i)
      for (std::size_t j = i + 1; j < res.renders.size(); ++j)
        max_mad = std::max(max_mad, mean_abs_diff(res.renders[i], res.renders[j]));
    json report = {{"seed", seed},
                   {"views", cfg.views},
                   {"repeat_view", cfg.repeat_view},
                   {"noise_scale", cfg.schedule.noise_scale},
                   {"singular_values", r.singular_values},
                   {"ratios", r.rank_deficient ? json(nullptr) : json(r.ratios)},
                   {"rank_deficient", r.rank_deficient},
                   {"high_rank", r.high_rank},
                   {"max_pairwise_render_mad", max_mad}};
    const std::string tag = "seed" + std::to_string(seed);
    sink.json_file("coherence/" + tag + ".json", report);
    std::vector<Image> frames;
    for (const Tensor& t : res.renders) frames.push_back(to_image(t));
    sink.png("coherence/strip_" + tag + ".png", hstack(frames));
    reports.push_back(report);
    std::cout << "coherence " << tag << ": " << (r.rank_deficient ? "rank deficient" : r.high_rank ? "high rank" : "low rank")
              << "\n";
  }
  sum.metrics["reports"] = reports;
  return sum;
}

RunSummary cmd_render(const LabConfig& cfg, const Inputs& in, Sink& sink) {
  RunSummary sum;
  Timer timer;
  const std::vector<GBuffer> views = rasterize_all(*in.mesh, turntable(cfg));
  std::size_t covered = 0;
  Image mask(cfg.resolution * views.size(), cfg.resolution, 1);
  for (std::size_t v = 0; v < views.size(); ++v) {
    covered += views[v].covered();
    for (std::size_t y = 0; y < cfg.resolution; ++y)
      for (std::size_t x = 0; x < cfg.resolution; ++x)
        mask.at(y, v * cfg.resolution + x, 0) = views[v].mask[y * cfg.resolution + x];
  }
  sink.png("render/mask.png", mask);
  json envs = json::array();
  for (const NamedEnv& env : in.envs) {
    const Image strip = render_strip(in.target, views, env.light);
    sink.png("render/" + env.name + ".png", strip);
    double mean = 0.0;
    for (double v : strip.data) mean += v;
    mean /= static_cast<double>(strip.data.size());
    envs.push_back({{"env", env.name}, {"mean_display_value", mean}, {"clamped_texels", env.light.clamped}});
  }
  sum.timings.emplace_back("render", timer.lap());
  sum.metrics = {{"views", views.size()}, {"covered_pixels", covered}, {"envs", envs}, {"geometry_shared", true}};
  return sum;
}

RunSummary cmd_relight(const LabConfig& cfg, const Inputs& in, Sink& sink) {
  std::set<std::string> names;
  for (const NamedEnv& e : in.envs)
    if (!names.insert(e.name).second) throw ConfigError("config field 'envs': duplicate environment '" + e.name + "'");
  return cmd_render(cfg, in, sink);
}

}  // namespace

Inputs load_inputs(const LabConfig& cfg) {
  Inputs in;
  in.target = load_texture(cfg, cfg.target, "target", false);
  if (cfg.command == Command::coherence) in.current = load_texture(cfg, cfg.current, "current", true);
  if (needs_scene(cfg.command)) {
    const bool builtin = cfg.mesh == "sphere" || cfg.mesh == "plane";
    if (!builtin && !fs::is_regular_file(cfg.resolve(cfg.mesh)))
      throw ConfigError("config field 'mesh': '" + cfg.mesh + "' is neither builtin nor a file");
    in.mesh = builtin ? builtin_mesh(cfg.mesh) : load_obj(cfg.resolve(cfg.mesh));
    for (const std::string& e : cfg.envs) in.envs.push_back(load_env(cfg, e));
  }
  return in;
}

OutputLock::OutputLock(const fs::path& dir) : path_(dir / kFileName) {
  const int fd = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0)
    throw ConfigError("output directory " + dir.string() + " is locked by another run (remove " + path_.string() +
                      " if that run is gone)");
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] const auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

OutputLock::~OutputLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

RunSummary run_command(const LabConfig& cfg, const Inputs& inputs) {
  Sink sink(cfg.out);
  RunSummary sum;
  switch (cfg.command) {
    case Command::fit: sum = cmd_fit(cfg, inputs, sink); break;
    case Command::synth: sum = cmd_synth(cfg, inputs, sink); break;
    case Command::freq: sum = cmd_freq(cfg, inputs, sink); break;
    case Command::coherence: sum = cmd_coherence(cfg, inputs, sink); break;
    case Command::render: sum = cmd_render(cfg, inputs, sink); break;
    case Command::relight: sum = cmd_relight(cfg, inputs, sink); break;
  }
  sum.files = sink.take();
  return sum;
}

void write_manifest(const LabConfig& cfg, const RunSummary& summary, double total_seconds) {
  json files = json::array();
  for (const std::string& rel : summary.files) {
    const fs::path p = cfg.out / rel;
    if (!fs::exists(p)) throw Error("manifest lists a missing file: " + p.string());
    files.push_back({{"path", rel}, {"bytes", fs::file_size(p)}});
  }
  json timings = json::object();
  for (const auto& [phase, s] : summary.timings) timings[phase] = s;
  timings["total"] = total_seconds;
  const json manifest = {
      {"command", to_string(cfg.command)},
      {"config", cfg.echo},
      {"timings_seconds", timings},
      {"versions",
       {{"lab", LAB_VERSION},
        {"compiler", __VERSION__},
        {"cplusplus", __cplusplus},
        {"libpng", LAB_PNG_VERSION},
        {"eigen", LAB_EIGEN_VERSION},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"threads", worker_count()},
      {"conditioning",
       "no text prompt or pretrained diffusion model: a reference texture, rendered from each view, stands in "
       "for the text prompt, and the SDS gradient is a target-plus-scaled-noise surrogate"},
      {"sds_space", "display: renders pass through clamp, Reinhard and gamma 1/2.2 before the surrogate"},
      {"files", files},
      {"metrics", summary.metrics}};
  std::ofstream out(cfg.out / "manifest.json", std::ios::binary);
  out << manifest.dump(2) << "\n";
  if (!out) throw Error("cannot write " + (cfg.out / "manifest.json").string());
}

int execute(Command command, const fs::path& config_path, std::optional<std::uint64_t> seed,
            std::optional<fs::path> out) {
  try {
    if (const char* env = std::getenv("LAB_THREADS")) {
      char* end = nullptr;
      const long n = std::strtol(env, &end, 10);
      if (*env == '\0' || *end != '\0' || n < 1) throw ConfigError("LAB_THREADS must be a positive integer");
    }
    const auto start = std::chrono::steady_clock::now();
    const LabConfig cfg = load_config(config_path, command, seed, std::move(out));
    const Inputs inputs = load_inputs(cfg);
    fs::create_directories(cfg.out);
    OutputLock lock(cfg.out);
    RunSummary summary = run_command(cfg, inputs);
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    write_manifest(cfg, summary, total);
    std::cout << "wrote " << summary.files.size() + 1 << " files to " << cfg.out.string() << "\n";
    return 0;
  } catch (const ConfigError& e) {
    std::cerr << "lab: config error: " << e.what() << "\n";
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "lab: config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "lab: numerical abort: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "lab: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace lab
