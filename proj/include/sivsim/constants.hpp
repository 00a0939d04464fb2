#pragma once

#include <numbers>

namespace sivsim {

/// Pinned physical constants (SI / spectroscopic units used throughout).
namespace constants {

inline constexpr double planck = 6.62607015e-34;    ///< Planck constant h (J s)
inline constexpr double boltzmann = 1.380649e-23;   ///< Boltzmann constant k_B (J/K)
inline constexpr double mu_b_over_h = 1.3996246e6;  ///< Bohr magneton mu_B/h (Hz/G)
inline constexpr double gamma_c13 = 1.0705e3;       ///< 13C gyromagnetic ratio (Hz/G)
inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// h/k_B in K/Hz: temperature equivalent of a transition frequency.
inline constexpr double h_over_kb = planck / boltzmann;

}  // namespace constants

}  // namespace sivsim
