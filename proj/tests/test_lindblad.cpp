#include <cmath>
#include <complex>

#include "doctest.h"
#include "sivsim/constants.hpp"
#include "sivsim/lindblad.hpp"

using namespace sivsim;
using cd = std::complex<double>;

namespace {

Eigen::Matrix2cd sigma_z() {
  Eigen::Matrix2cd m;
  m << -1, 0, 0, 1;  // basis index 0 = |down>, 1 = |up>
  return m;
}

Eigen::Matrix2cd sigma_x() {
  Eigen::Matrix2cd m;
  m << 0, 1, 1, 0;
  return m;
}

DensityMatrix plus_state() {
  DensityMatrix r;
  r.dim = 2;
  r.rho = Eigen::Matrix2cd::Constant(0.5);
  return r;
}

}  // namespace

TEST_CASE("evolve: identity evolution leaves the state unchanged") {
  DensityMatrix r = plus_state();
  DensityMatrix out =
      evolve(r, Eigen::Matrix2cd::Zero(), {}, 1.0e-6, 1.0e-8);
  CHECK((out.rho - r.rho).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("evolve: pure dephasing decays the coherence as exp(-gamma t)") {
  // D[sqrt(gamma/2) sigma_z] gives rho_01(t) = rho_01(0) exp(-gamma t).
  const double gamma = 2.0e5;
  for (double gt : {0.5, 1.0, 2.0}) {
    const double t = gt / gamma;
    JumpOperator j{sigma_z(), gamma / 2.0};
    DensityMatrix out =
        evolve(plus_state(), Eigen::Matrix2cd::Zero(), {j}, t, 0.04 / gamma);
    CHECK(out.rho(0, 1).real() ==
          doctest::Approx(0.5 * std::exp(-gt)).epsilon(1e-4));
    CHECK(std::abs(out.rho(0, 1).imag()) < 1e-10);
    CHECK(out.rho(0, 0).real() == doctest::Approx(0.5).epsilon(1e-10));
  }
}

TEST_CASE("evolve: amplitude damping relaxes |up> as exp(-Gamma t)") {
  const double rate = 1.0e6;
  Eigen::Matrix2cd a = Eigen::Matrix2cd::Zero();
  a(0, 1) = 1.0;  // |down><up|
  for (double gt : {0.5, 1.0, 2.0}) {
    const double t = gt / rate;
    DensityMatrix out = evolve(DensityMatrix::pure(2, 1),
                               Eigen::Matrix2cd::Zero(), {JumpOperator{a, rate}},
                               t, 0.04 / rate);
    CHECK(out.rho(1, 1).real() == doctest::Approx(std::exp(-gt)).epsilon(1e-4));
    out.check();
  }
}

TEST_CASE("evolve: step-size preconditions throw named diagnostics") {
  DensityMatrix r = DensityMatrix::pure(2, 0);
  Eigen::Matrix2cd h = 1.0e9 * sigma_z();  // 1 GHz scale
  CHECK_THROWS_WITH_AS(evolve(r, h, {}, 1e-6, 1e-9),
                       doctest::Contains("Hamiltonian"),
                       std::invalid_argument);
  JumpOperator fast{sigma_z(), 1.0e9};
  CHECK_THROWS_WITH_AS(
      evolve(r, Eigen::Matrix2cd::Zero(), {fast}, 1e-6, 1e-9),
      doctest::Contains("jump operator 0"), std::invalid_argument);
  CHECK_THROWS(evolve(r, Eigen::Matrix2cd::Zero(), {}, 1e-6, 2e-6));  // dt > T
}

TEST_CASE("evolve: halving dt changes observables below 1e-4") {
  // Driven, detuned, dissipative segment as a convergence probe.
  Eigen::Matrix2cd h = 0.5e6 * sigma_x() + 0.2e6 * sigma_z();
  JumpOperator deph{sigma_z(), 0.5e5};
  DensityMatrix a = evolve(DensityMatrix::pure(2, 1), h, {deph}, 4e-6, 1e-8);
  DensityMatrix b = evolve(DensityMatrix::pure(2, 1), h, {deph}, 4e-6, 5e-9);
  CHECK(std::abs(expectation(a, sigma_z()) - expectation(b, sigma_z())) <
        1e-4);
  CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("evolve is deterministic") {
  Eigen::Matrix2cd h = 1.1e6 * sigma_x() + 0.3e6 * sigma_z();
  JumpOperator deph{sigma_z(), 2.0e4};
  DensityMatrix a = evolve(plus_state(), h, {deph}, 2e-6, 5e-9);
  DensityMatrix b = evolve(plus_state(), h, {deph}, 2e-6, 5e-9);
  CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("apply_mw_pulse: pi and pi/2 pulses") {
  // t_pi = 1/(2 Omega): 100 ns at 5 MHz.
  DensityMatrix up = DensityMatrix::pure(2, 1);
  DensityMatrix flipped = apply_mw_pulse(up, 5e6, 0.0, 0.0, 100e-9);
  CHECK(flipped.rho(0, 0).real() >= 0.9999);

  DensityMatrix half = apply_mw_pulse(up, 5e6, 0.0, 0.0, 50e-9);
  CHECK(std::abs(half.rho(0, 1)) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(half.rho(0, 0).real() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("apply_mw_pulse: free precession phase at 550 kHz") {
  const double delta = 550e3;
  const double t = 1.0 / delta;  // one full fringe period, 1.818 us
  DensityMatrix r = plus_state();
  DensityMatrix out = apply_mw_pulse(r, 0.0, delta, 0.0, t);
  // phase angle of rho_01 returns to 0 mod 2pi within 1e-6
  CHECK(std::abs(std::arg(out.rho(0, 1))) < 1e-6);
  CHECK(std::abs(out.rho(0, 1)) == doctest::Approx(0.5).epsilon(1e-9));
  // half a period flips the sign
  DensityMatrix mid = apply_mw_pulse(r, 0.0, delta, 0.0, 0.5 * t);
  CHECK(mid.rho(0, 1).real() == doctest::Approx(-0.5).epsilon(1e-9));
}

TEST_CASE("apply_mw_pulse: pi-pulse pair is an involution on populations") {
  DensityMatrix r = DensityMatrix::pure(2, 1);
  DensityMatrix twice = apply_mw_pulse(
      apply_mw_pulse(r, 5e6, 0.0, 0.0, 100e-9), 5e6, 0.0, 0.0, 100e-9);
  CHECK(twice.rho(1, 1).real() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("apply_mw_pulse: dephasing trace sample-and-hold") {
  DephasingTrace tr;
  tr.sample_dt = 1e-7;
  tr.offsets_hz = {100e3, -100e3};  // net zero phase over 200 ns
  DensityMatrix out = apply_mw_pulse(plus_state(), 0.0, 0.0, 0.0, 200e-9, &tr);
  CHECK(std::abs(std::arg(out.rho(0, 1))) < 1e-12);

  DephasingTrace short_tr;
  short_tr.sample_dt = 1e-7;
  short_tr.offsets_hz = {0.0};
  CHECK_THROWS_AS(
      apply_mw_pulse(plus_state(), 0.0, 0.0, 0.0, 200e-9, &short_tr),
      std::invalid_argument);
}

TEST_CASE("qubit_wait matches evolve on the same generator to 1e-10") {
  const double delta = 3.2e5, gphi = 4.0e4, g1 = 1.5e4, t = 6e-6;
  DensityMatrix start = apply_mw_pulse(DensityMatrix::pure(2, 1), 5e6, 0.0,
                                       0.0, 50e-9);  // superposition
  // Generator: H = diag(-delta/2, +delta/2) Hz; dephasing D[sqrt(gphi/2) sz];
  // symmetric relaxation D[sqrt(g1/2) s-] + D[sqrt(g1/2) s+].
  Eigen::Matrix2cd h = 0.5 * delta * sigma_z();
  Eigen::Matrix2cd sm = Eigen::Matrix2cd::Zero(), sp = Eigen::Matrix2cd::Zero();
  sm(0, 1) = 1.0;
  sp(1, 0) = 1.0;
  std::vector<JumpOperator> jumps{{sigma_z(), gphi / 2.0},
                                  {sm, g1 / 2.0},
                                  {sp, g1 / 2.0}};
  DensityMatrix via_rk4 = evolve(start, h, jumps, t, 1.0 / (1200.0 * delta));
  DensityMatrix exact = qubit_wait(start, delta, gphi, g1, t);
  CHECK((via_rk4.rho - exact.rho).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("expectation basics and errors") {
  CHECK(expectation(DensityMatrix::pure(2, 1),
                    Eigen::Matrix2cd::Identity()) == doctest::Approx(1.0));
  CHECK(expectation(DensityMatrix::pure(2, 1), sigma_z()) ==
        doctest::Approx(1.0));
  CHECK(expectation(plus_state(), sigma_x()) == doctest::Approx(1.0));
  CHECK_THROWS_AS(
      expectation(DensityMatrix::pure(3, 0), Eigen::Matrix2cd::Identity()),
      std::invalid_argument);
}

TEST_CASE("density matrix invariants are enforced") {
  DensityMatrix bad;
  bad.dim = 2;
  bad.rho = Eigen::Matrix2cd::Zero();
  bad.rho(0, 0) = 1.5;  // trace violation
  CHECK_THROWS_AS(bad.check(), std::runtime_error);
  bad.rho(0, 0) = 1.0;
  bad.rho(0, 1) = cd(0.0, 1.0);  // non-Hermitian (rho10 stays 0)
  CHECK_THROWS_AS(bad.check(), std::runtime_error);
  CHECK_THROWS_AS(DensityMatrix::pure(7, 0), std::invalid_argument);
  CHECK_THROWS_AS(DensityMatrix::pure(2, 2), std::invalid_argument);
}
