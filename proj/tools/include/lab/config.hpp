#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "paintlab/losses.hpp"

namespace lab {

using nlohmann::json;

enum class Command { fit, synth, freq, coherence, render, relight };

std::string to_string(Command c);
/// Throws paintlab::ConfigError for an unknown name.
Command parse_command(const std::string& name);

/// One experiment, as read from the JSON config. Every field has a default;
/// unknown fields are rejected so typos cannot silently fall back.
struct LabConfig {
  Command command = Command::fit;
  std::size_t resolution = 64;
  std::size_t iterations = 0;  // 0 picks the command default
  std::vector<std::uint64_t> seeds{0};
  std::vector<std::string> param_kinds;  // empty picks the command default
  std::string target;                    // builtin target name or texture directory
  std::string current = "gray";          // coherence: texture the gradients are taken at
  std::string mesh = "sphere";
  std::vector<std::string> envs{"studio"};
  std::size_t env_width = 16;
  std::size_t env_height = 8;
  std::size_t snapshot_every = 10;
  std::optional<double> lr_pixel;  // unset picks the command default
  std::optional<double> lr_net;
  double pixel_init_std = 0.1;
  double lambda_tv = 0.1;
  std::size_t pool_size = 16;
  std::size_t views_per_iter = 4;
  std::size_t views = 0;  // coherence rows or turntable frames; 0 picks the default
  bool repeat_view = false;
  double distance = 3.0;
  double fov_degrees = 45.0;
  double elevation_degrees = 15.0;  // turntable elevation
  std::size_t levels = 5;
  paintlab::SdsSchedule schedule;
  std::filesystem::path out = "lab_out";
  std::filesystem::path base_dir;  // relative paths resolve against the config file
  json echo;                       // the effective config, for the manifest

  /// Resolves a path-valued field relative to the config file.
  std::filesystem::path resolve(const std::string& value) const;
};

/// Parses and validates. `seed` and `out` override the file when given.
/// Throws paintlab::ConfigError with the offending field name.
LabConfig parse_config(const json& doc, Command command, const std::filesystem::path& base_dir,
                       std::optional<std::uint64_t> seed, std::optional<std::filesystem::path> out);

LabConfig load_config(const std::filesystem::path& path, Command command, std::optional<std::uint64_t> seed,
                      std::optional<std::filesystem::path> out);

}  // namespace lab
