#pragma once

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

namespace sivsim {

/// Resonant microwave drive on the qubit transition.
struct MwPulse {
  double rabi_hz = 0.0;      ///< on-resonance Rabi frequency
  double detuning_hz = 0.0;  ///< drive frequency minus qubit frequency
  double phase_rad = 0.0;    ///< drive phase (x: 0, y: pi/2)
  double duration_s = 0.0;
};

enum class LaserTransition { kDown, kUp };  ///< resonant with f_dd' / f_uu'
enum class LaserRole { kInitialize, kReadout, kRepump };

/// Resonant optical drive on one spin-conserving transition.
struct LaserPulse {
  LaserTransition transition = LaserTransition::kDown;
  double saturation = 0.0;
  double duration_s = 0.0;
  LaserRole role = LaserRole::kInitialize;
};

struct WaitSegment {
  double duration_s = 0.0;
};

using PulseSegment = std::variant<MwPulse, LaserPulse, WaitSegment>;

enum class QubitInit { kUp, kDown };

/// Which field of a segment a sweep axis drives.  kMwFrequency takes the
/// swept value as an absolute drive frequency; the runner converts it to a
/// detuning against the system's qubit frequency.
enum class SweepField {
  kMwFrequency,
  kMwDetuning,
  kMwDuration,
  kWaitDuration,
  kLaserDuration,
};

/// One segment field updated per sweep point: applied = scale*value + offset.
/// CPMG uses scale to split a total evolution time over its delays and
/// offset to deduct finite pulse durations (center-to-center timing).
struct SweepTarget {
  std::size_t segment = 0;
  SweepField field = SweepField::kWaitDuration;
  double scale = 1.0;
  double offset = 0.0;
};

enum class ExperimentKind { kOdmr, kRabi, kRamsey, kCpmg, kT1, kPumping };

/// Field orientation case for the pumping-time experiment (Fig. 2d style):
/// each case runs trajectories at its own field and observation window.
/// strain_hz, when non-negative, overrides the emitter's transverse strain for
/// that case alone (the orientation series was taken across emitters with
/// different static strain, so cyclicity is a per-case property).
struct PumpingCase {
  double alpha_deg = 0.0;
  double b_mag = 0.0;
  double duration_s = 0.0;
  double strain_hz = -1.0;  ///< < 0: keep the system emitter's strain
};

struct PulseSequence {
  ExperimentKind kind = ExperimentKind::kOdmr;
  std::vector<PulseSegment> segments;
  std::string sweep_name;
  std::vector<double> sweep_values;
  std::vector<SweepTarget> targets;
  std::vector<PumpingCase> field_cases;  ///< kPumping only
  int shots_per_point = 1;
  QubitInit qubit_init = QubitInit::kDown;

  /// Structural invariants: exactly one readout laser, valid sweep targets,
  /// shots >= 1, non-negative durations/saturations.  Throws
  /// std::invalid_argument.
  void validate() const;
};

/// Segments for one sweep point.  f_qubit_hz resolves kMwFrequency axes to
/// detunings.  Throws std::invalid_argument when an applied value drives a
/// duration negative (e.g. total_time shorter than the summed pulses), with
/// the segment index in the message.
std::vector<PulseSegment> materialize(const PulseSequence& seq,
                                      double sweep_value, double f_qubit_hz);

/// Pulsed ODMR (Fig. 3b protocol): init laser, MW pulse of length tau_mw at
/// the swept frequency (Rabi frequency 1/(2 tau_mw): a pi pulse on
/// resonance, Fourier-limited linewidth), readout laser.
PulseSequence build_odmr(double tau_mw_s, double f_center_hz, double f_span_hz,
                         int n_points, double init_s = 15e-3,
                         double readout_s = 2e-3, double saturation = 0.1);

/// Rabi oscillations: swept MW duration between init and readout.
PulseSequence build_rabi(const std::vector<double>& durations_s, double rabi_hz,
                         double init_s = 15e-3, double readout_s = 2e-3,
                         double saturation = 0.1);

/// Ramsey fringes: pi/2 -- swept delay -- pi/2 at a fixed detuning.
PulseSequence build_ramsey(const std::vector<double>& delays_s,
                           double detuning_hz, double rabi_hz = 5e6,
                           double init_s = 15e-3, double readout_s = 2e-3,
                           double saturation = 0.1);

/// CPMG with Meiboom-Gill timing and phases: pi/2_x -- [tau/2 -- pi_y --
/// tau/2] x N -- pi/2_x, tau = T/N, delays center-to-center, swept total
/// evolution time T.
PulseSequence build_cpmg(int n_pulses, const std::vector<double>& total_times_s,
                         double rabi_hz = 5e6, double init_s = 15e-3,
                         double readout_s = 2e-3, double saturation = 0.1);

/// T1: init, swept wait, readout.
PulseSequence build_t1(const std::vector<double>& waits_s,
                       double init_s = 15e-3, double readout_s = 2e-3,
                       double saturation = 0.1);

/// Optical-pumping time versus field orientation: one resonant laser pulse
/// per case; the runner records the first spin-flip time per trajectory.
/// The cyclicity calibration is quoted at saturation 1, hence the default.
PulseSequence build_pumping(const std::vector<PumpingCase>& cases,
                            double saturation = 1.0);

/// Canonical one-line-per-segment text form (golden-test support).
std::string to_canonical_text(const PulseSequence& seq);

}  // namespace sivsim
