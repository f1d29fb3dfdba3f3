#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "lab/config.hpp"
#include "paintlab/mesh.hpp"
#include "paintlab/shading.hpp"
#include "paintlab/texture.hpp"

namespace lab {

struct NamedEnv {
  std::string name;
  paintlab::EnvLight light;
};

/// Everything a command reads from disk or builds from builtin names.
/// Loaded in full before the output directory is touched.
struct Inputs {
  paintlab::TextureSet target;
  std::optional<paintlab::TextureSet> current;
  std::optional<paintlab::Mesh> mesh;
  std::vector<NamedEnv> envs;
};

/// Throws paintlab::ConfigError for missing or malformed inputs.
Inputs load_inputs(const LabConfig& cfg);

/// Exclusive claim on an output directory, held through a lock file that is
/// created atomically and removed on destruction.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir);
  ~OutputLock();
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

  static constexpr const char* kFileName = ".lab.lock";

 private:
  std::filesystem::path path_;
};

struct RunSummary {
  json metrics;
  std::vector<std::string> files;  // relative to cfg.out, in write order
  std::vector<std::pair<std::string, double>> timings;  // phase, seconds
};

/// Runs one command into cfg.out, which must already be locked. Writes
/// everything except the manifest.
RunSummary run_command(const LabConfig& cfg, const Inputs& inputs);

/// Writes manifest.json: config echo, timings, versions, file inventory,
/// metrics and the conditioning notes.
void write_manifest(const LabConfig& cfg, const RunSummary& summary, double total_seconds);

/// Validates, loads, locks, runs and writes the manifest. Returns the
/// process exit code: 0 ok, 2 config error, 3 numerical abort.
int execute(Command command, const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
            std::optional<std::filesystem::path> out);

}  // namespace lab
