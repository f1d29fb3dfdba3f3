#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "lab/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"paintlab experiment harness"};
  app.require_subcommand(1);

  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<lab::Command> chosen;

  for (const char* name : {"fit", "synth", "freq", "coherence", "render", "relight"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config, "experiment config (JSON)")->required();
    sub->add_option("--seed", seed, "overrides the config seeds with one seed");
    sub->add_option("--out", out, "output directory");
    sub->callback([&chosen, name] { chosen = lab::parse_command(name); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  std::optional<std::filesystem::path> out_dir;
  if (out) out_dir = *out;
  return lab::execute(*chosen, config, seed, out_dir);
}
