#pragma once

#include <functional>
#include <vector>

#include "sivsim/rng.hpp"
#include "sivsim/siv_model.hpp"

namespace sivsim {

/// Level indices of the optical jump process.  LB/UB are the ground-state
/// branches, LB' the lower excited branch addressed by the laser.
enum JumpLevel : int {
  kLbDown = 0,
  kLbUp = 1,
  kUbDown = 2,
  kUbUp = 3,
  kLbpDown = 4,
  kLbpUp = 5,
};

inline constexpr int kNumLevels = 6;

/**
 * @brief Rate graph for the continuous-time Markov jump process.
 *
 * rate[i][j] is the transition rate i -> j in Hz; photon[i][j] marks the
 * radiative zero-phonon-line decays whose emissions are candidates for
 * collection.
 */
struct LevelGraph {
  double rate[kNumLevels][kNumLevels] = {};
  bool photon[kNumLevels][kNumLevels] = {};
};

/**
 * @brief Assemble the pumping/readout graph from a RateSet.
 *
 * The laser drives the addressed spin-conserving optical transition at
 * r_scatter (drive_down selects f_down-down'); the unaddressed spin state
 * is excited only at the off-resonant floor r_offres.  Excited decays
 * branch per (gamma_par, gamma_perp) with photons, and into the upper
 * ground branch at branch_ub/tau_optical without collected photons (the UB
 * channel radiates outside the collection line).  UB relaxes to LB
 * spin-conservingly at 1/tau_ub; gamma_plus re-excites LB to UB thermally;
 * gamma_t1 acts as a symmetric flip-flop within each ground branch.
 */
LevelGraph build_level_graph(const RateSet& rates, const SivParams& params,
                             bool drive_down, double r_offres_hz);

/// One transition of a trajectory, as seen by a streaming observer.
struct JumpEvent {
  double time = 0.0;    ///< seconds from the start of the window
  int from = 0;         ///< level departed
  int to = 0;           ///< level arrived
  bool photon = false;  ///< emission passed the collection Bernoulli
};

/// Record of one trajectory; see JumpEvent for field meanings.
struct TrajectoryRecord {
  std::vector<double> jump_times;   ///< strictly increasing (s)
  std::vector<int> level_path;      ///< level occupied after each jump
  std::vector<double> photon_times; ///< collected emissions (s)
};

/**
 * @brief Streaming Gillespie simulation; returns the final level.
 *
 * Calls observer for every jump in time order.  Identical (inputs, rng
 * state) produce identical event streams bit-for-bit: exponential waiting
 * times, branch selection (fixed destination order), and per-emission
 * collection Bernoulli draws all come from the single stream in a fixed
 * sequence.  Throws std::invalid_argument for an out-of-range initial
 * level.
 */
int run_jump_process(int initial_level, const LevelGraph& graph,
                     double duration_s, double eta_collect, RngStream& rng,
                     const std::function<void(const JumpEvent&)>& observer);

/// Record-building wrapper around run_jump_process.
TrajectoryRecord jump_trajectory(int initial_level, const LevelGraph& graph,
                                 double duration_s, double eta_collect,
                                 RngStream& rng);

}  // namespace sivsim
