#pragma once

#include <Eigen/Dense>
#include <complex>
#include <vector>

namespace sivsim {

/**
 * @brief Small dense density matrix (dim 2-6).
 *
 * Invariants: Hermitian to 1e-10, unit trace to 1e-9, minimum eigenvalue
 * >= -1e-9.  check() enforces them and is called on the output of every
 * evolution segment.
 */
struct DensityMatrix {
  int dim = 2;
  Eigen::MatrixXcd rho;  ///< dim x dim, dimensionless populations/coherences

  /// |level><level| in a dim-level space.
  static DensityMatrix pure(int dim, int level);

  /// Throws std::runtime_error when an invariant is violated.
  void check() const;
};

/// One Lindblad collapse channel: dissipator rate * D[matrix].
struct JumpOperator {
  Eigen::MatrixXcd matrix;  ///< dim x dim jump matrix (dimensionless)
  double rate = 0.0;        ///< channel rate (Hz), >= 0
};

/**
 * @brief Deterministic Lindblad evolution by fixed-step RK4.
 *
 * The generator L[rho] = -i 2 pi [H, rho] + sum_k r_k D[A_k] rho is built
 * once (vectorized, column-major) and stepped with uniform steps no larger
 * than dt.  H is in Hz; rates in Hz.
 *
 * Preconditions: dt <= duration and dt * max(2 pi ||H||, r_k ||A_k||^2)
 * <= 0.05; violations throw std::invalid_argument naming the offending
 * scale.  Postconditions: all DensityMatrix invariants (checked).
 */
DensityMatrix evolve(const DensityMatrix& rho, const Eigen::MatrixXcd& h_hz,
                     const std::vector<JumpOperator>& jumps, double duration_s,
                     double dt_s);

/// Sample-and-hold frequency-offset record for noisy MW pulses.
struct DephasingTrace {
  double sample_dt = 0.0;          ///< hold time per sample (s)
  std::vector<double> offsets_hz;  ///< additive detuning per interval
};

/**
 * @brief Rotating-frame MW pulse on the qubit (dim 2), exact unitary.
 *
 * H/h = (rabi/2)(cos(phase) sigma_x + sin(phase) sigma_y)
 *       + (detuning/2) sigma_z, with sigma_z = |up><up| - |down><down|
 * (basis index 0 = |down>, 1 = |up>).  Piecewise-constant segments are
 * exponentiated in closed form (axis-angle), so no step-size parameter is
 * needed.  When a dephasing trace is given, its sample-and-hold offsets add
 * to the detuning; a trace shorter than the pulse is rejected.
 */
DensityMatrix apply_mw_pulse(const DensityMatrix& rho, double rabi_hz,
                             double detuning_hz, double phase_rad,
                             double duration_s,
                             const DephasingTrace* trace = nullptr);

/**
 * @brief Exact free-evolution propagator for the undriven qubit.
 *
 * Populations relax toward 1/2 at gamma_1; the coherence evolves as
 * rho_01 *= exp((+i 2 pi detuning - gamma_phi - gamma_1/2) t), the phase
 * sign matching apply_mw_pulse's sigma_z convention.  Closed
 * form of the same Lindblad generator evolve() integrates (cross-checked
 * in tests), used for long wait segments where RK4 stepping would be
 * wasteful.
 */
DensityMatrix qubit_wait(const DensityMatrix& rho, double detuning_hz,
                         double gamma_phi_hz, double gamma_1_hz,
                         double duration_s);

/// Tr(rho * O) for Hermitian O, computed on the symmetrized operator.
/// Throws std::invalid_argument on dimension mismatch.
double expectation(const DensityMatrix& rho, const Eigen::MatrixXcd& observable);

}  // namespace sivsim
