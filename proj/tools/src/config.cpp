#include "lab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "paintlab/error.hpp"

namespace lab {
namespace {

using paintlab::ConfigError;

[[noreturn]] void bad(const std::string& field, const std::string& why) {
  throw ConfigError("config field '" + field + "': " + why);
}

std::size_t as_size(const json& v, const std::string& field) {
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (!v.is_number_integer() || v.get<std::int64_t>() < 0) bad(field, "expected a non-negative integer");
  return static_cast<std::size_t>(v.get<std::int64_t>());
}

double as_double(const json& v, const std::string& field) {
  if (!v.is_number()) bad(field, "expected a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) bad(field, "must be finite");
  return d;
}

std::string as_string(const json& v, const std::string& field) {
  if (!v.is_string()) bad(field, "expected a string");
  return v.get<std::string>();
}

std::vector<std::string> as_string_list(const json& v, const std::string& field) {
  if (v.is_string()) return {v.get<std::string>()};
  if (!v.is_array() || v.empty()) bad(field, "expected a string or a non-empty list of strings");
  std::vector<std::string> out;
  for (const json& e : v) out.push_back(as_string(e, field));
  return out;
}

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

void read_schedule(const json& j, paintlab::SdsSchedule& s) {
  if (!j.is_object()) bad("schedule", "expected an object");
  for (const auto& [key, v] : j.items()) {
    const std::string f = "schedule." + key;
    if (key == "t_min_start") s.t_min_start = as_double(v, f);
    else if (key == "t_max_start") s.t_max_start = as_double(v, f);
    else if (key == "t_min_end") s.t_min_end = as_double(v, f);
    else if (key == "t_max_end") s.t_max_end = as_double(v, f);
    else if (key == "noise_scale") s.noise_scale = as_double(v, f);
    else bad(f, "unknown field");
  }
}

const std::set<std::string>& kinds_for(Command c) {
  static const std::set<std::string> fit{"pixel", "reparam", "reparam_noskip"};
  static const std::set<std::string> synth{"pixel_tv", "dcpbr"};
  static const std::set<std::string> none;
  return c == Command::fit ? fit : c == Command::synth ? synth : none;
}

}  // namespace

std::string to_string(Command c) {
  switch (c) {
    case Command::fit: return "fit";
    case Command::synth: return "synth";
    case Command::freq: return "freq";
    case Command::coherence: return "coherence";
    case Command::render: return "render";
    case Command::relight: return "relight";
  }
  return "?";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::fit, Command::synth, Command::freq, Command::coherence, Command::render,
                    Command::relight})
    if (to_string(c) == name) return c;
  throw ConfigError("unknown command '" + name + "'");
}

std::filesystem::path LabConfig::resolve(const std::string& value) const {
  const std::filesystem::path p(value);
  return p.is_absolute() ? p : base_dir / p;
}

LabConfig parse_config(const json& doc, Command command, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed, std::optional<std::filesystem::path> out) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  LabConfig c;
  c.command = command;
  c.base_dir = base_dir;

  for (const auto& [key, v] : doc.items()) {
    if (key == "experiment") {
      if (as_string(v, key) != to_string(command))
        bad(key, "'" + v.get<std::string>() + "' does not match the command '" + to_string(command) + "'");
    } else if (key == "resolution") c.resolution = as_size(v, key);
    else if (key == "iterations") c.iterations = as_size(v, key);
    else if (key == "seeds" || key == "seed") {
      c.seeds.clear();
      if (v.is_array()) {
        for (const json& s : v) c.seeds.push_back(as_size(s, key));
      } else {
        c.seeds.push_back(as_size(v, key));
      }
      if (c.seeds.empty()) bad(key, "needs at least one seed");
    } else if (key == "param_kind" || key == "param_kinds") c.param_kinds = as_string_list(v, key);
    else if (key == "target" || key == "reference" || key == "texture") c.target = as_string(v, key);
    else if (key == "current") c.current = as_string(v, key);
    else if (key == "mesh") c.mesh = as_string(v, key);
    else if (key == "env" || key == "envs") c.envs = as_string_list(v, key);
    else if (key == "env_width") c.env_width = as_size(v, key);
    else if (key == "env_height") c.env_height = as_size(v, key);
    else if (key == "snapshot_every") c.snapshot_every = as_size(v, key);
    else if (key == "lr_pixel") c.lr_pixel = as_double(v, key);
    else if (key == "lr_net") c.lr_net = as_double(v, key);
    else if (key == "pixel_init_std") c.pixel_init_std = as_double(v, key);
    else if (key == "lambda_tv") c.lambda_tv = as_double(v, key);
    else if (key == "pool_size") c.pool_size = as_size(v, key);
    else if (key == "views_per_iter") c.views_per_iter = as_size(v, key);
    else if (key == "views") c.views = as_size(v, key);
    else if (key == "repeat_view") {
      if (!v.is_boolean()) bad(key, "expected true or false");
      c.repeat_view = v.get<bool>();
    } else if (key == "distance") c.distance = as_double(v, key);
    else if (key == "fov_degrees") c.fov_degrees = as_double(v, key);
    else if (key == "elevation_degrees") c.elevation_degrees = as_double(v, key);
    else if (key == "levels") c.levels = as_size(v, key);
    else if (key == "schedule") read_schedule(v, c.schedule);
    else if (key == "out" || key == "output") c.out = as_string(v, key);
    else bad(key, "unknown field");
  }
  if (seed) c.seeds = {*seed};
  if (out) c.out = *out;
  else if (c.out.is_relative()) c.out = base_dir / c.out;

  // Command defaults.
  const bool is_fit = command == Command::fit, is_synth = command == Command::synth;
  if (c.iterations == 0) c.iterations = is_synth ? 500 : 1000;
  if (!c.lr_pixel) c.lr_pixel = is_synth ? 1e-1 : 1e-2;
  if (!c.lr_net) c.lr_net = is_fit ? 2e-2 : is_synth ? 5e-3 : 5e-4;
  if (c.views == 0) c.views = command == Command::coherence ? 5 : 8;
  if (c.target.empty()) c.target = is_synth || command == Command::coherence ? "natural" : "multiband";
  if (c.param_kinds.empty()) {
    if (is_fit) c.param_kinds = {"pixel", "reparam"};
    if (is_synth) c.param_kinds = {"pixel_tv", "dcpbr"};
  }

  if (c.resolution < 16 || !is_power_of_two(c.resolution)) bad("resolution", "must be a power of two >= 16");
  if (c.levels == 0 || c.levels > 8) bad("levels", "must lie in [1, 8]");
  if (c.resolution % (std::size_t{1} << c.levels) != 0)
    bad("resolution", "must be divisible by 2^levels = " + std::to_string(std::size_t{1} << c.levels));
  if (c.snapshot_every == 0) bad("snapshot_every", "must be positive");
  if (!(*c.lr_pixel > 0.0)) bad("lr_pixel", "must be positive");
  if (!(*c.lr_net > 0.0)) bad("lr_net", "must be positive");
  if (!(c.pixel_init_std >= 0.0)) bad("pixel_init_std", "must be non-negative");
  if (!(c.lambda_tv >= 0.0)) bad("lambda_tv", "must be non-negative");
  if (c.pool_size == 0) bad("pool_size", "must be positive");
  if (c.views_per_iter == 0 || c.views_per_iter > c.pool_size) bad("views_per_iter", "must lie in [1, pool_size]");
  if (c.views == 0) bad("views", "must be positive");
  if (command == Command::coherence && c.views < 2) bad("views", "coherence needs at least 2 views");
  if (!(c.distance > 0.0)) bad("distance", "must be positive");
  if (!(c.fov_degrees > 0.0 && c.fov_degrees < 180.0)) bad("fov_degrees", "must lie in (0, 180)");
  if (c.env_width < 2 || c.env_height < 2) bad("env_width", "environment maps need at least 2x2 texels");
  if (!(c.schedule.noise_scale >= 0.0)) bad("schedule.noise_scale", "must be non-negative");
  {
    paintlab::SdsSchedule s = c.schedule;
    s.total_iters = c.iterations;
    try {
      s.validate();
    } catch (const ConfigError& e) {
      bad("schedule", e.what());
    }
  }
  const auto& allowed = kinds_for(command);
  for (const std::string& k : c.param_kinds) {
    if (allowed.empty()) bad("param_kind", "not used by '" + to_string(command) + "'");
    if (!allowed.count(k)) bad("param_kind", "'" + k + "' is not valid for '" + to_string(command) + "'");
  }
  std::set<std::uint64_t> unique(c.seeds.begin(), c.seeds.end());
  if (unique.size() != c.seeds.size()) bad("seeds", "contains duplicates");
  if (command == Command::relight && c.envs.size() < 2) bad("envs", "relight needs at least two environments");

  c.echo = doc;
  c.echo["experiment"] = to_string(command);
  c.echo["resolution"] = c.resolution;
  c.echo["iterations"] = c.iterations;
  c.echo["seeds"] = c.seeds;
  c.echo["param_kinds"] = c.param_kinds;
  c.echo["target"] = c.target;
  c.echo["envs"] = c.envs;
  c.echo["lr_pixel"] = *c.lr_pixel;
  c.echo["lr_net"] = *c.lr_net;
  c.echo["views"] = c.views;
  c.echo["out"] = c.out.string();
  c.echo.erase("param_kind");
  c.echo.erase("env");
  c.echo.erase("seed");
  c.echo.erase("output");
  return c;
}

LabConfig load_config(const std::filesystem::path& path, Command command, std::optional<std::uint64_t> seed,
                      std::optional<std::filesystem::path> out) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc, command, path.parent_path(), seed, std::move(out));
}

}  // namespace lab
