#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sivsim/rng.hpp"
#include "sivsim/siv_model.hpp"

namespace sivsim {

/// Ornstein-Uhlenbeck frequency noise: rms sigma (rad/s), correlation tau_c.
struct OuModel {
  double sigma = 0.0;
  double tau_c = 0.0;
};

/// Quasi-static Gaussian frequency offset, constant within a shot.
struct QuasiStaticModel {
  double sigma = 0.0;  ///< rad/s
};

/// Spectral density sampled on a grid; linearly interpolated between points
/// and zero outside the tabulated range.
struct TabulatedModel {
  std::vector<double> omega;       ///< rad/s, strictly increasing
  std::vector<double> s_of_omega;  ///< (rad/s), >= 0
};

/// One weakly coupled 13C nuclear spin (two-pulse echo modulation).
struct SingleC13Model {
  double a_par = 0.0;   ///< parallel hyperfine (Hz)
  double a_perp = 0.0;  ///< transverse hyperfine (Hz)
  double b_mag = 0.0;   ///< field magnitude (G)
};

using NoiseModel =
    std::variant<OuModel, QuasiStaticModel, TabulatedModel, SingleC13Model>;

/// Throws std::invalid_argument when a model invariant is violated.
void validate_noise(const NoiseModel& model);

/**
 * @brief Exact-discretization OU trace (stationary start).
 *
 * x_0 = sigma*xi, then x_{k+1} = x_k e^(-dt/tau_c)
 * + sigma sqrt(1 - e^(-2dt/tau_c)) xi_k.  Returns n_steps values (rad/s).
 */
std::vector<double> sample_ou(const OuModel& model, double dt_s,
                              std::size_t n_steps, RngStream& rng);

/// One quasi-static g-factor frequency offset (rad/s): Gaussian, zero mean,
/// std 2 pi delta_g (mu_B/h) b_mag.
double sample_quasistatic_g(const SivParams& params, const FieldConfig& field,
                            RngStream& rng);

/**
 * @brief CPMG filter |f~(omega)|^2 scaled so chi = (1/pi) Int S F / w^2 dw.
 *
 * Ideal instantaneous pi pulses at Meiboom-Gill spacing (tau/2, tau, ...,
 * tau/2) with tau = T/N:
 *   F = 8 sin^4(w tau/4) P / cos^2(w tau/2),
 *   P = sin^2(w T/2) for even N, cos^2(w T/2) for odd N.
 * Removable singularities at the cosine zeros are evaluated through the
 * exact local identity P/cos^2 = (sin(N d)/sin(d))^2 with d the distance
 * to the zero.  n_pulses = 0 selects free evolution, F = 2 sin^2(w T/2).
 */
double cpmg_filter(int n_pulses, double total_time_s, double omega_rad_s);

/**
 * @brief Analytic coherence W = exp(-chi) for OU or Tabulated noise.
 *
 * chi = (1/pi) Int_0^inf S(w) F(w)/w^2 dw by adaptive panel-wise Simpson
 * quadrature, relative error <= 1e-6; non-convergence throws
 * std::runtime_error.  n_pulses = 0 means free evolution (Ramsey-style).
 */
double coherence_decay(const NoiseModel& model, int n_pulses,
                       double total_time_s);

/**
 * @brief Monte Carlo <cos phi> for the same sequences (OU or QuasiStatic).
 *
 * Phase accumulation with the CPMG toggling sign; shot i draws from
 * RngStream(seed, point_id, i, 0), so results are independent of batching
 * and worker count.
 */
double mc_coherence(const NoiseModel& model, int n_pulses, double total_time_s,
                    std::size_t n_shots, double dt_s, std::uint64_t seed,
                    std::uint64_t point_id);

/// Two-pulse echo modulation V(2 tau) for one 13C; see SingleC13Model.
double eseem_echo(const SingleC13Model& model, double tau_s);

/// Parse a two-column "omega S" text file ('#' comments); throws
/// std::runtime_error with the offending line number on malformed input.
TabulatedModel load_spectrum(const std::string& path);

}  // namespace sivsim
