#include <array>
#include <cmath>
#include <cstring>

#include "doctest.h"
#include "sivsim/lindblad.hpp"
#include "sivsim/trajectory.hpp"

using namespace sivsim;

namespace {

SivParams readout_params() {
  SivParams p;
  p.lambda_so = 46e9;
  p.strain_x = 6.856e9;
  return p;
}

LevelGraph default_graph(double saturation, double r_offres) {
  SivParams p = readout_params();
  FieldConfig f{2700.0, 0.5};
  RateSet rs = rate_set(p, f, 0.1, saturation);
  return build_level_graph(rs, p, /*drive_down=*/true, r_offres);
}

}  // namespace

TEST_CASE("level graph wiring matches the rate assembly") {
  SivParams p = readout_params();
  FieldConfig f{2700.0, 0.5};
  RateSet rs = rate_set(p, f, 0.1, 1.0);
  LevelGraph g = build_level_graph(rs, p, true, 100.0);

  CHECK(g.rate[kLbDown][kLbpDown] == rs.r_scatter);
  CHECK(g.rate[kLbUp][kLbpUp] == 100.0);
  CHECK(g.rate[kLbpDown][kLbDown] == rs.gamma_par);
  CHECK(g.rate[kLbpDown][kLbUp] == rs.gamma_perp);
  CHECK(g.photon[kLbpDown][kLbUp]);
  CHECK_FALSE(g.photon[kLbpDown][kUbDown]);
  CHECK(g.rate[kLbpDown][kUbDown] ==
        doctest::Approx(p.branch_ub / p.tau_optical).epsilon(1e-12));
  CHECK(g.rate[kUbDown][kLbDown] == doctest::Approx(1.0 / p.tau_ub));
  // total excited decay adds up to 1/tau_optical
  double total = g.rate[kLbpDown][kLbDown] + g.rate[kLbpDown][kLbUp] +
                 g.rate[kLbpDown][kUbDown];
  CHECK(total == doctest::Approx(1.0 / p.tau_optical).epsilon(1e-12));
  CHECK_THROWS(build_level_graph(rs, p, true, -1.0));
}

TEST_CASE("trajectories are deterministic and strictly ordered") {
  LevelGraph g = default_graph(1.0, 0.0);
  RngStream r1(7, 11, 0, 0), r2(7, 11, 0, 0);
  TrajectoryRecord a = jump_trajectory(kLbDown, g, 50e-6, 0.1, r1);
  TrajectoryRecord b = jump_trajectory(kLbDown, g, 50e-6, 0.1, r2);
  REQUIRE(a.jump_times.size() == b.jump_times.size());
  CHECK(std::memcmp(a.jump_times.data(), b.jump_times.data(),
                    a.jump_times.size() * sizeof(double)) == 0);
  CHECK(a.level_path == b.level_path);
  CHECK(a.photon_times == b.photon_times);
  CHECK(a.jump_times.size() > 10);
  for (std::size_t i = 1; i < a.jump_times.size(); ++i)
    CHECK(a.jump_times[i] > a.jump_times[i - 1]);
  // photons are a subset of jump times
  for (double t : a.photon_times)
    CHECK(std::count(a.jump_times.begin(), a.jump_times.end(), t) == 1);
}

TEST_CASE("eta_collect = 0 never records photons") {
  LevelGraph g = default_graph(1.0, 0.0);
  RngStream rng(3, 5, 0, 0);
  TrajectoryRecord rec = jump_trajectory(kLbDown, g, 200e-6, 0.0, rng);
  CHECK(rec.jump_times.size() > 100);
  CHECK(rec.photon_times.empty());
}

TEST_CASE("invalid initial level and eta are rejected") {
  LevelGraph g = default_graph(1.0, 0.0);
  RngStream rng(1, 1, 0, 0);
  CHECK_THROWS_AS(jump_trajectory(-1, g, 1e-6, 0.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(jump_trajectory(6, g, 1e-6, 0.0, rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(jump_trajectory(0, g, 1e-6, 1.5, rng),
                  std::invalid_argument);
}

TEST_CASE("mean pumping time matches the geometric-waiting oracle") {
  // Slow drive (R << 1/tau_optical), no UB branch, no floors: the time to
  // reach |up> is geometric in the per-scatter flip probability p, so the
  // mean first-passage time is 1/(R p) up to the excited-state dwell.
  SivParams p = readout_params();
  p.branch_ub = 0.0;
  p.gamma_t1 = 1e-12;  // effectively off (validation needs > 0)
  p.flip_floor = 0.0;
  p.flip_scale = 1.0;
  FieldConfig f{2900.0, 40.0};
  RateSet rs = rate_set(p, f, 0.1, 0.02);  // R ~ 5.8e6 Hz
  const double pflip = flip_probability(p, f);
  LevelGraph g = build_level_graph(rs, p, true, 0.0);

  const int n = 10000;
  double sum = 0.0;
  int reached = 0;
  for (int shot = 0; shot < n; ++shot) {
    RngStream rng(99, 1234, shot, 0);
    double first = -1.0;
    run_jump_process(kLbDown, g, 1.0, 0.0, rng, [&](const JumpEvent& ev) {
      if (first < 0.0 && ev.to == kLbUp) first = ev.time;
    });
    if (first >= 0.0) {
      sum += first;
      ++reached;
    }
  }
  REQUIRE(reached == n);
  const double expected = 1.0 / (rs.r_scatter * pflip);
  CHECK(sum / n == doctest::Approx(expected).epsilon(0.05));
}

TEST_CASE("occupations match the master equation at 10 checkpoints") {
  // Cross-engine check: the classical master equation is the Lindblad
  // evolution with jump operators |j><i| and no Hamiltonian.
  SivParams p = readout_params();
  FieldConfig f{2900.0, 60.0};
  RateSet rs = rate_set(p, f, 0.1, 0.5);
  LevelGraph g = build_level_graph(rs, p, true, 1e3);

  std::vector<JumpOperator> jumps;
  for (int i = 0; i < kNumLevels; ++i)
    for (int j = 0; j < kNumLevels; ++j)
      if (g.rate[i][j] > 0.0) {
        Eigen::MatrixXcd a = Eigen::MatrixXcd::Zero(kNumLevels, kNumLevels);
        a(j, i) = 1.0;
        jumps.push_back({a, g.rate[i][j]});
      }

  const int n = 10000;
  const double t_max = 2e-6;
  std::array<std::array<int, kNumLevels>, 10> counts{};
  for (int shot = 0; shot < n; ++shot) {
    RngStream rng(42, 77, shot, 0);
    std::array<int, 10> level_at;
    level_at.fill(kLbDown);
    int level = kLbDown;
    run_jump_process(kLbDown, g, t_max, 0.0, rng, [&](const JumpEvent& ev) {
      for (int c = 0; c < 10; ++c)
        if (ev.time <= (c + 1) * t_max / 10.0) level_at[c] = ev.to;
      level = ev.to;
    });
    (void)level;
    for (int c = 0; c < 10; ++c) ++counts[c][level_at[c]];
  }

  DensityMatrix rho = DensityMatrix::pure(kNumLevels, kLbDown);
  for (int c = 0; c < 10; ++c) {
    rho = evolve(rho, Eigen::MatrixXcd::Zero(kNumLevels, kNumLevels), jumps,
                 t_max / 10.0, 8e-11);
    for (int l = 0; l < kNumLevels; ++l) {
      const double pexp = rho.rho(l, l).real();
      const double phat = static_cast<double>(counts[c][l]) / n;
      const double sigma = std::sqrt(std::max(pexp * (1.0 - pexp) / n, 1e-12));
      CHECK(std::abs(phat - pexp) <= 3.0 * sigma + 1e-3);
    }
  }
}
