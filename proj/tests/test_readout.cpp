#include "doctest.h"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "sivsim/readout.hpp"
#include "sivsim/rng.hpp"
#include "sivsim/siv_model.hpp"

namespace {

using namespace sivsim;

/// The readout operating point: a near-aligned field on the 48 GHz emitter,
/// resonant saturation drive, and the collection efficiency of the fiber
/// path.  The same numbers drive the single-shot histogram config.
struct OperatingPoint {
  SivParams params;
  FieldConfig field{2700.0, 1.8};
  double temperature_k = 0.1;
  double saturation = 1.0;
  double window_s = 1.9874e-3;
  double eta = 4.473e-5;

  OperatingPoint() {
    params.strain_x = 6.8556546e9;
    params.offres_fraction = 3.30e-2;
  }
};

/// Poisson CDF P(N <= t) computed by direct summation.
double poisson_cdf(double mean, int t) {
  double term = std::exp(-mean);
  double sum = term;
  for (int k = 1; k <= t; ++k) {
    term *= mean / k;
    sum += term;
  }
  return sum;
}

/// Exact-pmf histogram for Poisson counting statistics, integerized onto
/// n_shots shots with the rounding remainder pushed into the top bin.
CountHistogram poisson_histogram(double mean_down, double mean_up,
                                 int n_shots, int max_count) {
  CountHistogram h;
  h.n_shots = n_shots;
  h.window_s = 1.0;
  long long left_down = n_shots, left_up = n_shots;
  for (int k = 0; k <= max_count; ++k) {
    h.bin_values.push_back(k);
    if (k < max_count) {
      const double pd = poisson_cdf(mean_down, k) -
                        (k ? poisson_cdf(mean_down, k - 1) : 0.0);
      const double pu =
          poisson_cdf(mean_up, k) - (k ? poisson_cdf(mean_up, k - 1) : 0.0);
      const int fd = static_cast<int>(std::llround(pd * n_shots));
      const int fu = static_cast<int>(std::llround(pu * n_shots));
      h.freq_down.push_back(fd);
      h.freq_up.push_back(fu);
      left_down -= fd;
      left_up -= fu;
    } else {
      h.freq_down.push_back(static_cast<int>(left_down));
      h.freq_up.push_back(static_cast<int>(left_up));
    }
  }
  return h;
}

/// Upper critical value of chi^2 at p = 0.001 (Wilson-Hilferty).
double chi2_crit_999(int dof) {
  const double z = 3.0902;  // N(0,1) 99.9th percentile
  const double a = 2.0 / (9.0 * dof);
  const double c = 1.0 - a + z * std::sqrt(a);
  return dof * c * c * c;
}

}  // namespace

TEST_CASE("histogram tallies are exact") {
  const CountHistogram h = build_histograms({0, 2, 2, 5}, {1, 1, 0, 7}, 1e-3);
  h.validate();
  CHECK(h.n_shots == 4);
  REQUIRE(h.bin_values == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7});
  CHECK(h.freq_down == std::vector<int>{1, 0, 2, 0, 0, 1, 0, 0});
  CHECK(h.freq_up == std::vector<int>{1, 2, 0, 0, 0, 0, 0, 1});
  CHECK(std::abs(histogram_mean(h, true) - 2.25) < 1e-12);
  CHECK(std::abs(histogram_mean(h, false) - 2.25) < 1e-12);

  const CountHistogram single = build_histograms({3}, {4}, 1.0);
  CHECK(single.bin_values == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(single.freq_down == std::vector<int>{0, 0, 0, 1, 0});

  CHECK_THROWS_AS(build_histograms({}, {}, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(build_histograms({1}, {2}, 0.0), std::invalid_argument);
}

TEST_CASE("threshold fidelity matches a brute-force count to 1e-12") {
  RngStream rng(7, 1, 2, 3);
  std::vector<int> down, up;
  for (int i = 0; i < 500; ++i) {
    down.push_back(static_cast<int>(10.0 * rng.uniform()));
    up.push_back(static_cast<int>(4.0 * rng.uniform()));
  }
  const CountHistogram h = build_histograms(down, up, 1.0);
  for (int t = 0; t <= 12; ++t) {
    int nd = 0, nu = 0;
    for (int c : down) nd += c > t;
    for (int c : up) nu += c <= t;
    const ThresholdFidelity f = threshold_fidelity(h, t);
    CHECK(std::abs(f.f_down - nd / 500.0) < 1e-12);
    CHECK(std::abs(f.f_up - nu / 500.0) < 1e-12);
    CHECK(std::abs(f.f_avg - 0.5 * (f.f_down + f.f_up)) < 1e-12);
  }
  CHECK_THROWS_AS(threshold_fidelity(h, -1), std::invalid_argument);

  // f_down can only fall and f_up only rise as the threshold moves up.
  ThresholdFidelity prev = threshold_fidelity(h, 0);
  for (int t = 1; t <= 12; ++t) {
    const ThresholdFidelity f = threshold_fidelity(h, t);
    CHECK(f.f_down <= prev.f_down);
    CHECK(f.f_up >= prev.f_up);
    prev = f;
  }
  // Beyond the largest observed count everything classifies as |up>.
  const ThresholdFidelity top = threshold_fidelity(h, 99);
  CHECK(top.f_down == 0.0);
  CHECK(top.f_up == 1.0);
}

TEST_CASE("Poisson histograms reproduce the analytic CDF fidelities") {
  // Counting statistics of the readout means 6.2 / 0.52 with no spin flips:
  // at threshold 1, F_down = 1 - e^-6.2 (1 + 6.2) and F_up = e^-0.52 (1.52).
  const CountHistogram h = poisson_histogram(6.2, 0.52, 100'000'000, 40);
  const ThresholdFidelity f = threshold_fidelity(h, 1);
  CHECK(std::abs(f.f_down - (1.0 - poisson_cdf(6.2, 1))) < 2e-6);
  CHECK(std::abs(f.f_up - poisson_cdf(0.52, 1)) < 2e-6);
  CHECK(std::abs(f.f_down - 0.985388) < 1e-5);
  CHECK(std::abs(f.f_up - 0.903668) < 1e-5);
  CHECK(std::abs(f.f_avg - 0.944528) < 1e-5);

  // For pure Poisson statistics the best cut moves up to 2 (the heavy
  // low tail that favors threshold 1 comes from spin flips, absent here).
  const auto best = optimal_threshold(h);
  CHECK(best.first == 2);
  double favg2 = 0.5 * ((1.0 - poisson_cdf(6.2, 2)) + poisson_cdf(0.52, 2));
  CHECK(std::abs(best.second - favg2) < 2e-6);
}

TEST_CASE("optimal threshold breaks ties toward the smaller count") {
  // Identical distributions: f_avg = 1/2 at every threshold.
  CountHistogram h;
  h.bin_values = {0, 1, 2};
  h.freq_down = {5, 3, 2};
  h.freq_up = {5, 3, 2};
  h.n_shots = 10;
  h.window_s = 1.0;
  const auto best = optimal_threshold(h);
  CHECK(best.first == 0);
  CHECK(std::abs(best.second - 0.5) < 1e-12);
}

TEST_CASE("flip-free readout counts are Poisson") {
  // With the spin-flip channel disabled the emitter cycles forever and the
  // collected counts are a Bernoulli thinning of the radiative decays:
  // Poisson to excellent accuracy at small eta.  Mean = eta (1-b) R_exc W.
  OperatingPoint op;
  op.params.flip_scale = 0.0;
  op.params.flip_floor = 0.0;
  const double window = 5e-5;
  const double eta = 8.486e-4;
  const RateSet rates =
      rate_set(op.params, op.field, op.temperature_k, op.saturation);
  const double r_exc =
      rates.r_scatter /
      (1.0 + rates.r_scatter * (op.params.tau_optical +
                                op.params.branch_ub * op.params.tau_ub));
  const double mean_pred = eta * (1.0 - op.params.branch_ub) * r_exc * window;

  const int shots = 8000;
  std::map<int, int> tally;
  double sum = 0.0;
  for (int i = 0; i < shots; ++i) {
    RngStream rng(4242, point_id("noflip", 0.0), i, 0);
    const int n = simulate_readout_window(
        0, rates, op.params, window, eta,
        op.params.offres_fraction * rates.r_scatter, rng);
    ++tally[n];
    sum += n;
  }
  const double mean = sum / shots;
  CHECK(mean == doctest::Approx(mean_pred).epsilon(0.02));

  // Chi-square goodness of fit against Poisson(mean), pooling tail bins
  // with expectation below 5.
  std::vector<double> expected;
  std::vector<int> observed;
  double e_pool = 0.0;
  int o_pool = 0;
  const int top = tally.rbegin()->first;
  for (int k = 0; k <= top; ++k) {
    const double pk = poisson_cdf(mean, k) -
                      (k ? poisson_cdf(mean, k - 1) : 0.0);
    const double e = pk * shots;
    const auto it = tally.find(k);
    const int o = it == tally.end() ? 0 : it->second;
    if (e < 5.0) {
      e_pool += e;
      o_pool += o;
    } else {
      expected.push_back(e);
      observed.push_back(o);
    }
  }
  e_pool += (1.0 - poisson_cdf(mean, top)) * shots;
  if (e_pool > 0.0) {
    expected.push_back(e_pool);
    observed.push_back(o_pool);
  }
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const double d = observed[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  const int dof = static_cast<int>(expected.size()) - 2;  // mean estimated
  REQUIRE(dof >= 3);
  CHECK(chi2 < chi2_crit_999(dof));
}

TEST_CASE("calibrated operating point reproduces the readout separation") {
  // Single-shot readout at the 1.8 deg / 2.7 kG point: ~6.2 collected
  // photons from |down>, ~0.5 from |up>, and ~89% average fidelity at a
  // count threshold of 1.
  const OperatingPoint op;
  const RateSet rates =
      rate_set(op.params, op.field, op.temperature_k, op.saturation);
  const double r_off = op.params.offres_fraction * rates.r_scatter;

  const int shots = 1500;
  std::vector<int> down, up;
  down.reserve(shots);
  up.reserve(shots);
  for (int i = 0; i < shots; ++i) {
    RngStream rng_d(99, point_id("fig2e", 0.0), i, 0);
    down.push_back(simulate_readout_window(0, rates, op.params, op.window_s,
                                           op.eta, r_off, rng_d));
    RngStream rng_u(99, point_id("fig2e", 1.0), i, 0);
    up.push_back(simulate_readout_window(1, rates, op.params, op.window_s,
                                         op.eta, r_off, rng_u));
  }
  const CountHistogram h = build_histograms(down, up, op.window_s);
  CHECK(histogram_mean(h, true) == doctest::Approx(6.2).epsilon(0.3 / 6.2));
  CHECK(histogram_mean(h, false) ==
        doctest::Approx(0.52).epsilon(0.05 / 0.52));
  const ThresholdFidelity f = threshold_fidelity(h, 1);
  CHECK(f.f_avg > 0.865);
  CHECK(f.f_avg < 0.915);
}

TEST_CASE("UB shelving duty loss follows the cycle accounting") {
  const OperatingPoint op;
  const RateSet rates =
      rate_set(op.params, op.field, op.temperature_k, op.saturation);
  const double cycle = 1.0 / rates.r_scatter + op.params.tau_optical +
                       op.params.branch_ub * op.params.tau_ub;
  const double expect = op.params.branch_ub * op.params.tau_ub / cycle;
  CHECK(ub_duty_loss(rates, op.params) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(expect > 0.0);
  CHECK(expect < 1.0);
}

TEST_CASE("histogram CSV uses the fixed header and CRLF rows") {
  const CountHistogram h = build_histograms({0, 3}, {1, 1}, 1e-3);
  const std::string path = "test_hist_out.csv";
  write_histogram_csv(h, path);
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::remove(path.c_str());
  CHECK(text.rfind("count,freq_down,freq_up\r\n", 0) == 0);
  CHECK(text.find("0,1,0\r\n") != std::string::npos);
  CHECK(text.find("1,0,2\r\n") != std::string::npos);
  CHECK(text.find("3,1,0\r\n") != std::string::npos);
}
