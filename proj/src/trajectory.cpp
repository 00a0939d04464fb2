#include "sivsim/trajectory.hpp"

#include <stdexcept>

namespace sivsim {

LevelGraph build_level_graph(const RateSet& rates, const SivParams& params,
                             bool drive_down, double r_offres_hz) {
  if (!(r_offres_hz >= 0.0))
    throw std::invalid_argument("build_level_graph: r_offres must be >= 0");
  LevelGraph g;

  // Laser excitation: addressed spin at r_scatter, the other at the
  // off-resonant floor.
  g.rate[kLbDown][kLbpDown] = drive_down ? rates.r_scatter : r_offres_hz;
  g.rate[kLbUp][kLbpUp] = drive_down ? r_offres_hz : rates.r_scatter;

  // Excited-state decays: spin-conserving/flipping radiative (collected
  // photon candidates) and the uncollected branch into UB.
  const double to_ub = params.branch_ub / params.tau_optical;
  g.rate[kLbpDown][kLbDown] = rates.gamma_par;
  g.photon[kLbpDown][kLbDown] = true;
  g.rate[kLbpDown][kLbUp] = rates.gamma_perp;
  g.photon[kLbpDown][kLbUp] = true;
  g.rate[kLbpDown][kUbDown] = to_ub;
  g.rate[kLbpUp][kLbUp] = rates.gamma_par;
  g.photon[kLbpUp][kLbUp] = true;
  g.rate[kLbpUp][kLbDown] = rates.gamma_perp;
  g.photon[kLbpUp][kLbDown] = true;
  g.rate[kLbpUp][kUbUp] = to_ub;

  // Orbital relaxation and thermal re-excitation within the ground state.
  g.rate[kUbDown][kLbDown] = 1.0 / params.tau_ub;
  g.rate[kUbUp][kLbUp] = 1.0 / params.tau_ub;
  g.rate[kLbDown][kUbDown] = rates.gamma_plus;
  g.rate[kLbUp][kUbUp] = rates.gamma_plus;

  // Intrinsic spin relaxation: symmetric flip-flop in each branch.
  g.rate[kLbDown][kLbUp] = rates.gamma_t1 / 2.0;
  g.rate[kLbUp][kLbDown] = rates.gamma_t1 / 2.0;
  g.rate[kUbDown][kUbUp] = rates.gamma_t1 / 2.0;
  g.rate[kUbUp][kUbDown] = rates.gamma_t1 / 2.0;
  return g;
}

int run_jump_process(int initial_level, const LevelGraph& graph,
                     double duration_s, double eta_collect, RngStream& rng,
                     const std::function<void(const JumpEvent&)>& observer) {
  if (initial_level < 0 || initial_level >= kNumLevels)
    throw std::invalid_argument("run_jump_process: initial level out of range");
  if (!(eta_collect >= 0.0 && eta_collect <= 1.0))
    throw std::invalid_argument("run_jump_process: eta_collect not in [0, 1]");
  if (!(duration_s >= 0.0))
    throw std::invalid_argument("run_jump_process: duration must be >= 0");

  int level = initial_level;
  double t = 0.0;
  for (;;) {
    double total = 0.0;
    for (int j = 0; j < kNumLevels; ++j) total += graph.rate[level][j];
    if (total <= 0.0) break;  // absorbing level: nothing more can happen

    t += rng.exponential() / total;
    if (t >= duration_s) break;

    // Destination by cumulative sum in fixed index order; roundoff at
    // u ~ total falls back to the last reachable destination.
    const double u = rng.uniform() * total;
    double acc = 0.0;
    int dest = -1;
    for (int j = 0; j < kNumLevels; ++j) {
      if (graph.rate[level][j] <= 0.0) continue;
      acc += graph.rate[level][j];
      dest = j;
      if (u < acc) break;
    }

    JumpEvent ev;
    ev.time = t;
    ev.from = level;
    ev.to = dest;
    // One collection draw per emission candidate keeps the stream layout
    // independent of eta_collect's value.
    ev.photon = graph.photon[level][dest] && rng.uniform() < eta_collect;
    level = dest;
    if (observer) observer(ev);
  }
  return level;
}

TrajectoryRecord jump_trajectory(int initial_level, const LevelGraph& graph,
                                 double duration_s, double eta_collect,
                                 RngStream& rng) {
  TrajectoryRecord rec;
  run_jump_process(initial_level, graph, duration_s, eta_collect, rng,
                   [&rec](const JumpEvent& ev) {
                     rec.jump_times.push_back(ev.time);
                     rec.level_path.push_back(ev.to);
                     if (ev.photon) rec.photon_times.push_back(ev.time);
                   });
  return rec;
}

}  // namespace sivsim
