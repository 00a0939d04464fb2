#pragma once

#include <string>

#include "sivsim/config.hpp"

namespace sivsim {

/// Paths written by run_to_directory.
struct RunArtifacts {
  std::string out_dir;
  std::string data_csv;
  std::string summary_json;
  std::string plot_svg;  ///< empty when plotting was disabled
};

/**
 * @brief Execute a parsed config and write its artifacts.
 *
 * Creates out_dir (parents included), runs the configured experiment, and
 * writes data.csv plus summary.json — fit results, fidelities, the seed,
 * wall time, and a canonical echo of the config under the "config" key
 * (sorted keys, shortest round-trip floats).  plot.svg is written unless
 * cfg.plot is false.  Errors propagate as exceptions; nothing is written
 * on a failed run except possibly the directory itself.
 */
RunArtifacts run_to_directory(const ExperimentConfig& cfg,
                              const std::string& out_dir);

}  // namespace sivsim
