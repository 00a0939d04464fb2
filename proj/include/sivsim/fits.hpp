#pragma once

#include <string>
#include <vector>

namespace sivsim {

/// Result of a weighted least-squares fit.  `names`, `values`, `sigmas` are
/// parallel; sigmas are standard errors scaled by the reduced chi-square
/// (all zero when the fit did not converge — never fabricated).
struct FitResult {
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> sigmas;
  double residual_rms = 0.0;  ///< rms of weighted residuals (dimensionless)
  bool converged = false;
  int n_iter = 0;
  std::string message;  ///< diagnostic when converged is false

  /// Parameter lookup by name; throws std::out_of_range on a bad name.
  double value(const std::string& name) const;
  double sigma(const std::string& name) const;
};

/// Decay envelope y = offset + amplitude * exp(-(x/t2)^p).
/// p_free ignores `p` and fits the exponent; otherwise p is held fixed
/// (p = 1 is a plain exponential).
struct DecayModel {
  double p = 1.0;
  bool p_free = false;
};

/// Damped cosine y = offset
///   + amplitude * exp(-(x/tau)^envelope_power) * cos(2 pi f x + phase).
/// envelope_power 1 suits Rabi decay, 2 the Gaussian Ramsey envelope.
struct OscillationModel {
  double envelope_power = 1.0;
};

/// Weighted fit of a (possibly stretched) decay.  Parameters: "amplitude",
/// "t2", "offset" (+ "p" when floated).  Requires >= 4 strictly increasing
/// x values; empty yerr means unit weights.
FitResult fit_decay(const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<double>& yerr,
                    const DecayModel& model = {});

/// Weighted fit of a damped cosine.  Parameters: "amplitude", "frequency",
/// "phase", "tau", "offset".  The frequency guess comes from a periodogram
/// scan, so no user seed is needed.  Requires >= 6 strictly increasing x.
FitResult fit_oscillation(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::vector<double>& yerr,
                          const OscillationModel& model = {});

/// Weighted linear fit of log t2 vs log n: t2 = prefactor * n^beta.
/// Parameters: "prefactor", "beta".  Requires >= 3 distinct positive n.
FitResult fit_power_law(const std::vector<double>& n_values,
                        const std::vector<double>& t2_values,
                        const std::vector<double>& t2_errs);

/// Fit of ratio(T) = exp(-h delta / (kB T)).  Parameter: "delta" (Hz).
/// A single temperature point yields converged = false (no degrees of
/// freedom), not an exception.
FitResult fit_boltzmann(const std::vector<double>& temperatures_k,
                        const std::vector<double>& ratios,
                        const std::vector<double>& errs);

}  // namespace sivsim
