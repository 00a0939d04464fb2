#pragma once

#include <string>
#include <vector>

#include "sivsim/noise.hpp"
#include "sivsim/runner.hpp"
#include "sivsim/sequence.hpp"

namespace sivsim {

/**
 * @brief One parsed experiment block; `kind` selects which fields apply.
 *
 * Defaults mirror the builder defaults so a config only has to state what
 * its panel changes.  Time grids are linspace(t_min, t_max, points) or
 * log-spaced when `log_spacing` (requires t_min > 0).
 */
struct ExperimentSpec {
  std::string kind;  ///< odmr|rabi|ramsey|cpmg|t1|pumping|readout_histogram|ple

  // MW/laser scaffolding shared by the sequence experiments.
  double rabi_hz = 5e6;
  double init_s = 15e-3;
  double readout_s = 2e-3;
  double saturation = 0.1;

  // odmr
  double tau_mw_s = 500e-6;
  double f_center_hz = 0.0;  ///< 0: center on the computed qubit frequency
  double span_hz = 8e3;

  // time sweeps (rabi, ramsey, cpmg, t1)
  double t_min_s = 0.0;
  double t_max_s = 1e-6;
  int points = 51;
  bool log_spacing = false;

  // ramsey
  double detuning_hz = 550e3;

  // cpmg
  int n_pulses = 1;
  double fit_exponent = 0.0;  ///< 0: float the stretch exponent in summaries

  // pumping
  std::vector<PumpingCase> cases;

  // readout_histogram
  double window_s = 1.9874e-3;

  // ple
  double linewidth_hz = 2e9;
  std::vector<double> temperatures_k;  ///< non-empty: Boltzmann-ratio mode
  double ratio_noise = 0.05;           ///< synthetic relative noise on ratios
};

/// Everything a run needs, parsed from one config document.
struct ExperimentConfig {
  SystemConfig system;
  std::vector<NoiseModel> noise;
  std::vector<std::string> noise_lines;  ///< canonical `key = value` per model
  ExperimentSpec experiment;
  RunOptions run;
  int shots = 500;
  std::string out_dir;  ///< from the [run] block; empty: CLI resolves
  bool plot = true;
};

/**
 * @brief Parse the line-oriented config format.
 *
 * `key = value` lines under `[section]` headers; `#` starts a comment.
 * Numbers accept SI suffixes (GHz, MHz, kHz, Hz, s, ms, us, ns, K, mK, kG,
 * G, deg) as pure multipliers, attached ("2.7kG") or space-separated
 * ("2.7 kG").  Exactly one experiment section is required.  Unknown
 * sections, unknown keys, bad units, and malformed values all throw
 * std::invalid_argument naming the line number.
 */
ExperimentConfig parse_config(const std::string& text);

/// parse_config on a file's contents; I/O failures throw std::runtime_error.
ExperimentConfig parse_config_file(const std::string& path);

/**
 * @brief Fully explicit canonical form: fixed section and key order, SI base
 * units, shortest round-trip floats.  parse_config of the output yields an
 * equivalent config, and canonicalizing again is byte-identical (fixed
 * point) — the golden-file contract for shipped configs.
 */
std::string canonical_config_text(const ExperimentConfig& cfg);

/// Build the pulse sequence for a sequence-experiment config (odmr, rabi,
/// ramsey, cpmg, t1, pumping), shots_per_point filled from the run block.
/// Throws std::invalid_argument for readout_histogram and ple.
PulseSequence build_sequence(const ExperimentConfig& cfg);

}  // namespace sivsim
