#pragma once

#include <string>
#include <utility>
#include <vector>

#include "sivsim/rng.hpp"
#include "sivsim/siv_model.hpp"
#include "sivsim/trajectory.hpp"

namespace sivsim {

/**
 * @brief Photon-count tallies for the two prepared spin states.
 *
 * bin_values[k] is an integer photon count; freq_down/freq_up hold the
 * number of shots with that count after preparing |down> / |up>.  Both
 * frequency arrays sum to n_shots.
 */
struct CountHistogram {
  std::vector<int> bin_values;
  std::vector<int> freq_down;
  std::vector<int> freq_up;
  int n_shots = 0;
  double window_s = 0.0;

  void validate() const;
};

/**
 * @brief One readout window: collected photon count of a single trajectory.
 *
 * The laser drives f_down-down' at rates.r_scatter; the unaddressed spin
 * scatters at the off-resonant floor r_offres_hz.  Spin-flip interruption,
 * UB shelving, and leakage of |up> into the bright state are all carried by
 * the jump process.
 */
int simulate_readout_window(int init_level, const RateSet& rates,
                            const SivParams& params, double window_s,
                            double eta_collect, double r_offres_hz,
                            RngStream& rng);

/// Exact tallies of two equal-length count records.  Throws
/// std::invalid_argument on empty or mismatched inputs, window <= 0.
CountHistogram build_histograms(const std::vector<int>& counts_down,
                                const std::vector<int>& counts_up,
                                double window_s);

/// Mean photon number of one prepared state ("down" or "up").
double histogram_mean(const CountHistogram& hist, bool down);

struct ThresholdFidelity {
  double f_down = 0.0;  ///< fraction of |down> shots with n > threshold
  double f_up = 0.0;    ///< fraction of |up> shots with n <= threshold
  double f_avg = 0.0;
};

/// State-detection fidelities at a given threshold (classify "down" when
/// n > threshold).  Throws std::invalid_argument for threshold < 0.
ThresholdFidelity threshold_fidelity(const CountHistogram& hist, int threshold);

/// Threshold maximizing f_avg; ties broken toward the smaller threshold.
std::pair<int, double> optimal_threshold(const CountHistogram& hist);

/**
 * @brief Analytic duty-cycle loss from UB shelving during readout.
 *
 * Fraction of a bright readout spent shelved in the upper ground branch:
 * branch_ub * tau_ub / (1/r_scatter + tau_optical + branch_ub * tau_ub).
 * Diagnostic for the repump-laser improvement discussion.
 */
double ub_duty_loss(const RateSet& rates, const SivParams& params);

/// CSV export with header `count,freq_down,freq_up`.
void write_histogram_csv(const CountHistogram& hist, const std::string& path);

}  // namespace sivsim
