#include "sivsim/sequence.hpp"

#include "sivsim/constants.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

namespace sivsim {

namespace {

void check_duration(double value, const char* what) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string(what) +
                                " must be finite and non-negative");
  }
}

LaserPulse make_init(double duration_s, double saturation) {
  return LaserPulse{LaserTransition::kDown, saturation, duration_s,
                    LaserRole::kInitialize};
}

LaserPulse make_readout(double duration_s, double saturation) {
  return LaserPulse{LaserTransition::kDown, saturation, duration_s,
                    LaserRole::kReadout};
}

}  // namespace

void PulseSequence::validate() const {
  if (shots_per_point < 1) {
    throw std::invalid_argument("shots_per_point must be >= 1");
  }
  if (sweep_values.empty()) {
    throw std::invalid_argument("sweep has no values");
  }
  int n_readout = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& seg = segments[i];
    if (const auto* mw = std::get_if<MwPulse>(&seg)) {
      check_duration(mw->duration_s, "MW pulse duration");
      if (!(mw->rabi_hz >= 0.0)) {
        throw std::invalid_argument("MW Rabi frequency must be >= 0");
      }
    } else if (const auto* laser = std::get_if<LaserPulse>(&seg)) {
      check_duration(laser->duration_s, "laser pulse duration");
      if (!(laser->saturation >= 0.0)) {
        throw std::invalid_argument("laser saturation must be >= 0");
      }
      if (laser->role == LaserRole::kReadout) ++n_readout;
    } else {
      check_duration(std::get<WaitSegment>(seg).duration_s, "wait duration");
    }
  }
  if (n_readout != 1) {
    throw std::invalid_argument(
        "sequence must contain exactly one readout laser pulse, found " +
        std::to_string(n_readout));
  }
  for (const auto& t : targets) {
    if (t.segment >= segments.size()) {
      throw std::invalid_argument("sweep target references segment " +
                                  std::to_string(t.segment) +
                                  " beyond the sequence");
    }
    const auto& seg = segments[t.segment];
    const bool is_mw = std::holds_alternative<MwPulse>(seg);
    const bool is_laser = std::holds_alternative<LaserPulse>(seg);
    const bool is_wait = std::holds_alternative<WaitSegment>(seg);
    const bool ok =
        ((t.field == SweepField::kMwFrequency ||
          t.field == SweepField::kMwDetuning ||
          t.field == SweepField::kMwDuration) &&
         is_mw) ||
        (t.field == SweepField::kWaitDuration && is_wait) ||
        (t.field == SweepField::kLaserDuration && is_laser);
    if (!ok) {
      throw std::invalid_argument(
          "sweep target field does not match segment " +
          std::to_string(t.segment) + "'s type");
    }
  }
  if (kind == ExperimentKind::kPumping) {
    if (field_cases.size() != sweep_values.size()) {
      throw std::invalid_argument(
          "pumping sequence needs one field case per sweep value");
    }
    for (const auto& c : field_cases) {
      check_duration(c.duration_s, "pumping observation window");
      if (!(c.b_mag > 0.0)) {
        throw std::invalid_argument("pumping case field magnitude must be > 0");
      }
    }
  } else if (!field_cases.empty()) {
    throw std::invalid_argument("field cases are only valid for pumping");
  }
}

std::vector<PulseSegment> materialize(const PulseSequence& seq,
                                      double sweep_value, double f_qubit_hz) {
  std::vector<PulseSegment> out = seq.segments;
  for (const auto& t : seq.targets) {
    const double applied = t.scale * sweep_value + t.offset;
    auto& seg = out.at(t.segment);
    switch (t.field) {
      case SweepField::kMwFrequency:
        std::get<MwPulse>(seg).detuning_hz = applied - f_qubit_hz;
        break;
      case SweepField::kMwDetuning:
        std::get<MwPulse>(seg).detuning_hz = applied;
        break;
      case SweepField::kMwDuration:
        if (applied < 0.0) {
          throw std::invalid_argument("sweep drives MW duration of segment " +
                                      std::to_string(t.segment) + " negative");
        }
        std::get<MwPulse>(seg).duration_s = applied;
        break;
      case SweepField::kWaitDuration:
        if (applied < 0.0) {
          throw std::invalid_argument(
              "sweep value " + std::to_string(sweep_value) +
              " leaves no room for the pulses around wait segment " +
              std::to_string(t.segment));
        }
        std::get<WaitSegment>(seg).duration_s = applied;
        break;
      case SweepField::kLaserDuration:
        if (applied < 0.0) {
          throw std::invalid_argument(
              "sweep drives laser duration of segment " +
              std::to_string(t.segment) + " negative");
        }
        std::get<LaserPulse>(seg).duration_s = applied;
        break;
    }
  }
  return out;
}

PulseSequence build_odmr(double tau_mw_s, double f_center_hz, double f_span_hz,
                         int n_points, double init_s, double readout_s,
                         double saturation) {
  if (n_points < 2) {
    throw std::invalid_argument("ODMR sweep needs at least 2 points");
  }
  check_duration(tau_mw_s, "MW pulse duration");
  if (!(tau_mw_s > 0.0)) {
    throw std::invalid_argument("MW pulse duration must be > 0");
  }
  if (!(f_span_hz > 0.0)) {
    throw std::invalid_argument("ODMR span must be > 0");
  }
  PulseSequence seq;
  seq.kind = ExperimentKind::kOdmr;
  seq.qubit_init = QubitInit::kUp;
  seq.segments.push_back(make_init(init_s, saturation));
  // A pi pulse on resonance; off resonance the sin^2 lineshape gives the
  // Fourier-limited linewidth ~ 1/tau_mw.
  seq.segments.push_back(MwPulse{0.5 / tau_mw_s, 0.0, 0.0, tau_mw_s});
  seq.segments.push_back(make_readout(readout_s, saturation));
  seq.sweep_name = "mw_frequency_hz";
  seq.targets.push_back({1, SweepField::kMwFrequency, 1.0, 0.0});
  seq.sweep_values.reserve(static_cast<std::size_t>(n_points));
  const double f0 = f_center_hz - 0.5 * f_span_hz;
  const double df = f_span_hz / (n_points - 1);
  for (int i = 0; i < n_points; ++i) {
    seq.sweep_values.push_back(f0 + df * i);
  }
  seq.validate();
  return seq;
}

PulseSequence build_rabi(const std::vector<double>& durations_s, double rabi_hz,
                         double init_s, double readout_s, double saturation) {
  if (!(rabi_hz > 0.0)) {
    throw std::invalid_argument("Rabi frequency must be > 0");
  }
  PulseSequence seq;
  seq.kind = ExperimentKind::kRabi;
  seq.qubit_init = QubitInit::kUp;
  seq.segments.push_back(make_init(init_s, saturation));
  seq.segments.push_back(MwPulse{rabi_hz, 0.0, 0.0, 0.0});
  seq.segments.push_back(make_readout(readout_s, saturation));
  seq.sweep_name = "mw_duration_s";
  seq.targets.push_back({1, SweepField::kMwDuration, 1.0, 0.0});
  seq.sweep_values = durations_s;
  seq.validate();
  return seq;
}

PulseSequence build_ramsey(const std::vector<double>& delays_s,
                           double detuning_hz, double rabi_hz, double init_s,
                           double readout_s, double saturation) {
  if (!(rabi_hz > 0.0)) {
    throw std::invalid_argument("Rabi frequency must be > 0");
  }
  const double t_half = 0.25 / rabi_hz;  // pi/2 pulse
  PulseSequence seq;
  seq.kind = ExperimentKind::kRamsey;
  seq.qubit_init = QubitInit::kUp;
  seq.segments.push_back(make_init(init_s, saturation));
  seq.segments.push_back(MwPulse{rabi_hz, detuning_hz, 0.0, t_half});
  seq.segments.push_back(WaitSegment{0.0});
  seq.segments.push_back(MwPulse{rabi_hz, detuning_hz, 0.0, t_half});
  seq.segments.push_back(make_readout(readout_s, saturation));
  seq.sweep_name = "delay_s";
  seq.targets.push_back({2, SweepField::kWaitDuration, 1.0, 0.0});
  seq.sweep_values = delays_s;
  seq.validate();
  return seq;
}

PulseSequence build_cpmg(int n_pulses, const std::vector<double>& total_times_s,
                         double rabi_hz, double init_s, double readout_s,
                         double saturation) {
  if (n_pulses < 1) {
    throw std::invalid_argument("CPMG needs at least one pi pulse");
  }
  if (!(rabi_hz > 0.0)) {
    throw std::invalid_argument("Rabi frequency must be > 0");
  }
  const double t_half = 0.25 / rabi_hz;  // pi/2
  const double t_pi = 0.5 / rabi_hz;
  const double n = static_cast<double>(n_pulses);
  PulseSequence seq;
  seq.kind = ExperimentKind::kCpmg;
  seq.qubit_init = QubitInit::kUp;
  seq.segments.push_back(make_init(init_s, saturation));
  seq.segments.push_back(MwPulse{rabi_hz, 0.0, 0.0, t_half});
  // Delays are center-to-center: the free gaps deduct half of each
  // neighbouring pulse.  Pi pulses are phase-shifted by 90 degrees
  // (Meiboom-Gill), making the train robust to pulse-length errors.
  for (int k = 0; k < n_pulses; ++k) {
    const bool edge_before = k == 0;
    const double gap_scale = edge_before ? 0.5 / n : 1.0 / n;
    const double gap_offset =
        -0.5 * ((edge_before ? t_half : t_pi) + t_pi);
    seq.targets.push_back(
        {seq.segments.size(), SweepField::kWaitDuration, gap_scale, gap_offset});
    seq.segments.push_back(WaitSegment{0.0});
    seq.segments.push_back(MwPulse{rabi_hz, 0.0, 0.5 * constants::pi, t_pi});
  }
  seq.targets.push_back({seq.segments.size(), SweepField::kWaitDuration,
                         0.5 / n, -0.5 * (t_pi + t_half)});
  seq.segments.push_back(WaitSegment{0.0});
  seq.segments.push_back(MwPulse{rabi_hz, 0.0, 0.0, t_half});
  seq.segments.push_back(make_readout(readout_s, saturation));
  seq.sweep_name = "total_time_s";
  seq.sweep_values = total_times_s;
  seq.validate();
  return seq;
}

PulseSequence build_t1(const std::vector<double>& waits_s, double init_s,
                       double readout_s, double saturation) {
  PulseSequence seq;
  seq.kind = ExperimentKind::kT1;
  seq.qubit_init = QubitInit::kUp;
  seq.segments.push_back(make_init(init_s, saturation));
  seq.segments.push_back(WaitSegment{0.0});
  seq.segments.push_back(make_readout(readout_s, saturation));
  seq.sweep_name = "wait_s";
  seq.targets.push_back({1, SweepField::kWaitDuration, 1.0, 0.0});
  seq.sweep_values = waits_s;
  seq.validate();
  return seq;
}

PulseSequence build_pumping(const std::vector<PumpingCase>& cases,
                            double saturation) {
  if (cases.empty()) {
    throw std::invalid_argument("pumping needs at least one field case");
  }
  PulseSequence seq;
  seq.kind = ExperimentKind::kPumping;
  seq.qubit_init = QubitInit::kDown;
  seq.segments.push_back(LaserPulse{LaserTransition::kDown, saturation, 0.0,
                                    LaserRole::kReadout});
  seq.sweep_name = "alpha_deg";
  seq.field_cases = cases;
  for (const auto& c : cases) {
    seq.sweep_values.push_back(c.alpha_deg);
  }
  seq.validate();
  return seq;
}

namespace {

const char* field_name(SweepField f) {
  switch (f) {
    case SweepField::kMwFrequency: return "mw_frequency";
    case SweepField::kMwDetuning: return "mw_detuning";
    case SweepField::kMwDuration: return "mw_duration";
    case SweepField::kWaitDuration: return "wait_duration";
    case SweepField::kLaserDuration: return "laser_duration";
  }
  return "?";
}

const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::kOdmr: return "odmr";
    case ExperimentKind::kRabi: return "rabi";
    case ExperimentKind::kRamsey: return "ramsey";
    case ExperimentKind::kCpmg: return "cpmg";
    case ExperimentKind::kT1: return "t1";
    case ExperimentKind::kPumping: return "pumping";
  }
  return "?";
}

}  // namespace

std::string to_canonical_text(const PulseSequence& seq) {
  std::ostringstream os;
  os.precision(17);
  os << "sequence " << kind_name(seq.kind) << " shots=" << seq.shots_per_point
     << " init=" << (seq.qubit_init == QubitInit::kUp ? "up" : "down") << '\n';
  for (const auto& seg : seq.segments) {
    if (const auto* mw = std::get_if<MwPulse>(&seg)) {
      os << "  mw rabi=" << mw->rabi_hz << " detuning=" << mw->detuning_hz
         << " phase=" << mw->phase_rad << " duration=" << mw->duration_s
         << '\n';
    } else if (const auto* l = std::get_if<LaserPulse>(&seg)) {
      os << "  laser transition="
         << (l->transition == LaserTransition::kDown ? "down" : "up")
         << " saturation=" << l->saturation << " duration=" << l->duration_s
         << " role="
         << (l->role == LaserRole::kInitialize
                 ? "initialize"
                 : l->role == LaserRole::kReadout ? "readout" : "repump")
         << '\n';
    } else {
      os << "  wait duration=" << std::get<WaitSegment>(seg).duration_s << '\n';
    }
  }
  os << "sweep " << seq.sweep_name;
  for (double v : seq.sweep_values) os << ' ' << v;
  os << '\n';
  for (const auto& t : seq.targets) {
    os << "  target segment=" << t.segment << " field=" << field_name(t.field)
       << " scale=" << t.scale << " offset=" << t.offset << '\n';
  }
  for (const auto& c : seq.field_cases) {
    os << "  case alpha=" << c.alpha_deg << " b=" << c.b_mag
       << " window=" << c.duration_s;
    if (c.strain_hz >= 0.0) os << " strain=" << c.strain_hz;
    os << '\n';
  }
  return os.str();
}

}  // namespace sivsim
