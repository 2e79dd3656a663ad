// capvertex <subcommand> --config <file> [--out <dir>] [--seed <u64>]

#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "capvertex/errors.hpp"
#include "capvertex/scenario.hpp"

namespace fs = std::filesystem;
using namespace capvertex;

namespace {

// Writes every artifact or none: files go to temporaries first and are
// renamed once all writes succeeded.
void write_artifacts(const fs::path& dir, const std::vector<Artifact>& artifacts) {
  fs::create_directories(dir);
  std::vector<fs::path> temps;
  auto cleanup = [&] {
    std::error_code ec;
    for (const auto& t : temps) fs::remove(t, ec);
  };
  for (const auto& a : artifacts) {
    const fs::path tmp = dir / (a.name + ".partial");
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << a.content;
    out.close();
    if (!out) {
      cleanup();
      throw std::runtime_error("cannot write " + (dir / a.name).string());
    }
  }
  for (std::size_t k = 0; k < artifacts.size(); ++k) fs::rename(temps[k], dir / artifacts[k].name);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"capvertex: capillary drops on intersecting planes"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  for (const char* name : {"classify", "cap", "solve-graph", "evolve", "verify"}) {
    CLI::App* sub = app.add_subcommand(name);
    sub->add_option("--config", config_path, "scenario config (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "64-bit seed; overrides the config");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  try {
    ScenarioConfig config = load_config(config_path);
    if (sub->count("--seed") > 0) config.seed = seed;
    if (sub->get_name() != subcommand_for(config.kind))
      throw ConfigError(config_path + ":1: kind '" + to_string(config.kind) + "' runs under '" +
                            subcommand_for(config.kind) + "', not '" + sub->get_name() + "'",
                        1);
    const RunResult result = run_scenario(config);
    write_artifacts(out_dir, result.artifacts);
    std::cout << result.summary << '\n';
    for (const auto& a : result.artifacts) std::cout << "  wrote " << (fs::path(out_dir) / a.name).string() << '\n';
    return result.exit_code;
  } catch (const ConfigError& e) {
    std::cerr << "capvertex: error: " << e.what() << '\n';
  } catch (const std::exception& e) {
    std::cerr << "capvertex: error: " << config_path << ": " << e.what() << '\n';
  }
  return 2;
}
