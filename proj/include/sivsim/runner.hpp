#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sivsim/noise.hpp"
#include "sivsim/sequence.hpp"
#include "sivsim/siv_model.hpp"

namespace sivsim {

/// Emitter, static field, and bath temperature for one run.
struct SystemConfig {
  SivParams params;
  FieldConfig field;
  double temperature_k = 0.1;

  void validate() const;
};

/**
 * @brief Execution knobs shared by all experiments.
 *
 * ideal_init replaces initialization lasers by an exact preparation of the
 * sequence's qubit_init state; ideal_readout replaces the readout
 * trajectory by a Born draw of the qubit populations (the classified bit
 * doubles as the photon count).  Both exist so coherence experiments can
 * spend their shots on the physics under test instead of on pumping
 * trajectories; the shipped readout/pumping experiments keep them off.
 */
struct RunOptions {
  std::uint64_t seed = 0;
  int workers = 1;
  bool ideal_init = false;
  bool ideal_readout = false;
  int threshold = 1;             ///< classify |down> when count > threshold
  double eta_collect = 4.473e-5;  ///< photon collection efficiency
  double pulse_error_sigma = 0;  ///< fractional rms Rabi-amplitude error
  double trace_dt = 0.0;         ///< OU sample-and-hold step; 0 = tau_c/32
};

/**
 * @brief Column-major result table.
 *
 * Standard experiments produce one row per sweep value with columns
 * {<sweep>, signal, error, bright_fraction, bright_error, mean_counts,
 * shots}.  With real readout, signal/error are the mean photon count and
 * its standard error; with ideal readout they repeat the bright fraction
 * and its binomial error.  The pumping experiment reports the censored-MLE
 * mean pumping time as signal and the flipped fraction as bright_fraction.
 */
struct DataTable {
  std::vector<std::string> columns;
  std::vector<std::vector<double>> cols;
  std::uint64_t seed = 0;

  std::size_t n_rows() const { return cols.empty() ? 0 : cols[0].size(); }
  const std::vector<double>& column(const std::string& name) const;
  void validate() const;
};

/**
 * @brief Run a pulse sequence shot by shot and aggregate per sweep point.
 *
 * Each (point, shot) owns counter-based RNG streams keyed by the sweep
 * value (not the point's position), so results are independent of sweep
 * order and of the worker count; workers partition whole points.  Stream 0
 * draws the noise realization (quasi-static offsets, then the OU path in
 * segment order), stream 1 the trajectory/measurement randomness, stream 2
 * per-pulse amplitude errors.
 *
 * Qubit segments evolve a 2x2 density matrix (exact pulse unitaries and
 * free propagators, OU phase accumulated per wait substep); laser segments
 * collapse the qubit by a Born draw and run the 6-level jump process, with
 * the readout laser's collected photons thresholded into the per-shot bit.
 * Quasi-static g-factor noise (params.delta_g) applies automatically; the
 * noise list may add OU and quasi-static channels.  Tabulated and single-
 * C13 models have no time-domain sampler and are rejected here (the
 * analytic coherence_decay/eseem_echo paths cover them).
 *
 * Errors from the engines are rethrown with the offending segment index.
 */
DataTable run_experiment(const PulseSequence& seq, const SystemConfig& sys,
                         const std::vector<NoiseModel>& noise,
                         const RunOptions& opt);

/// RFC-4180 CSV export (CRLF, header row, shortest round-trip floats).
void write_csv(const DataTable& table, const std::string& path);

}  // namespace sivsim
