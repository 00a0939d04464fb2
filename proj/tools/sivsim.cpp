// Command-line front end: parse a config, run the experiment it describes,
// and write data.csv / summary.json / plot.svg into an output directory.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"
#include "sivsim/config.hpp"
#include "sivsim/output.hpp"

namespace {

/// Output directory precedence: --out, then the config's [run] out key, then
/// $SIVSIM_OUT/<config stem>, then ./<config stem>_out.
std::string resolve_out_dir(const std::string& cfg_path,
                            const std::string& cfg_out,
                            const std::optional<std::string>& cli_out) {
  if (cli_out) return *cli_out;
  if (!cfg_out.empty()) return cfg_out;
  std::string stem = std::filesystem::path(cfg_path).stem().string();
  if (const char* root = std::getenv("SIVSIM_OUT")) {
    return (std::filesystem::path(root) / stem).string();
  }
  return stem + "_out";
}

/// All failures leave on stdout as one machine-readable JSON object.
int fail(const std::exception& e) {
  nlohmann::json j;
  j["error"] = e.what();
  std::cout << j.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"siv spin-qubit experiment simulator"};
  app.require_subcommand(1);

  std::string cfg_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<std::string> out;
  bool no_plot = false;

  CLI::App* run = app.add_subcommand("run", "run the configured experiment");
  run->add_option("config", cfg_path, "config file")->required();
  run->add_option("--seed", seed, "override the [run] seed");
  run->add_option("--workers", workers, "override the [run] worker count");
  run->add_option("--out", out, "override the output directory");
  run->add_flag("--no-plot", no_plot, "skip plot.svg");

  CLI::App* validate =
      app.add_subcommand("validate", "parse and check a config, run nothing");
  validate->add_option("config", cfg_path, "config file")->required();

  CLI::App* dump = app.add_subcommand(
      "dump-canonical", "print the fully explicit canonical form");
  dump->add_option("config", cfg_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    sivsim::ExperimentConfig cfg = sivsim::parse_config_file(cfg_path);
    if (seed) cfg.run.seed = *seed;
    if (workers) cfg.run.workers = *workers;
    if (no_plot) cfg.plot = false;

    if (dump->parsed()) {
      std::cout << sivsim::canonical_config_text(cfg);
      return 0;
    }

    cfg.system.validate();
    const std::string& kind = cfg.experiment.kind;
    if (kind != "readout_histogram" && kind != "ple") {
      sivsim::build_sequence(cfg);  // structural check, result unused here
    }

    if (validate->parsed()) {
      nlohmann::json j;
      j["ok"] = true;
      j["experiment"] = kind;
      std::cout << j.dump() << "\n";
      return 0;
    }

    std::string out_dir = resolve_out_dir(cfg_path, cfg.out_dir, out);
    sivsim::RunArtifacts art = sivsim::run_to_directory(cfg, out_dir);
    nlohmann::json j;
    j["out"] = art.out_dir;
    j["data_csv"] = art.data_csv;
    j["summary_json"] = art.summary_json;
    if (!art.plot_svg.empty()) j["plot_svg"] = art.plot_svg;
    std::cout << j.dump() << "\n";
    return 0;
  } catch (const std::exception& e) {
    return fail(e);
  }
}
