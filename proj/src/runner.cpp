#include "sivsim/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <thread>

#include "sivsim/constants.hpp"
#include "sivsim/format.hpp"
#include "sivsim/lindblad.hpp"
#include "sivsim/trajectory.hpp"

namespace sivsim {

void SystemConfig::validate() const {
  params.validate();
  field.validate();
  if (!(temperature_k > 0.0)) {
    throw std::invalid_argument("temperature must be > 0");
  }
}

const std::vector<double>& DataTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return cols[i];
  }
  throw std::out_of_range("no column named '" + name + "'");
}

void DataTable::validate() const {
  if (columns.size() != cols.size()) {
    throw std::runtime_error("data table column names and data disagree");
  }
  for (const auto& c : cols) {
    if (c.size() != n_rows()) {
      throw std::runtime_error("data table columns have unequal lengths");
    }
  }
}

namespace {

// ---------------------------------------------------------------------------
// Noise bookkeeping
// ---------------------------------------------------------------------------

/// Live AR(1) state of one OU channel during a shot.
struct OuChannel {
  double sigma = 0.0;
  double tau_c = 0.0;
  double x = 0.0;  ///< current offset (rad/s)
};

double advance_ou(OuChannel& c, double h, RngStream& rng) {
  const double decay = std::exp(-h / c.tau_c);
  const double amp = c.sigma * std::sqrt(-std::expm1(-2.0 * h / c.tau_c));
  c.x = c.x * decay + amp * rng.normal();
  return c.x;
}

/// Static per-run noise configuration split by how channels act.
struct NoisePlan {
  std::vector<double> qs_sigmas;     ///< quasi-static channels (rad/s)
  std::vector<OuChannel> ou;         ///< templates; x reset per shot
  double trace_dt = 0.0;             ///< OU sample-and-hold step
};

NoisePlan make_noise_plan(const std::vector<NoiseModel>& noise,
                          const RunOptions& opt) {
  NoisePlan plan;
  for (const auto& model : noise) {
    validate_noise(model);
    if (const auto* qs = std::get_if<QuasiStaticModel>(&model)) {
      plan.qs_sigmas.push_back(qs->sigma);
    } else if (const auto* ou = std::get_if<OuModel>(&model)) {
      plan.ou.push_back({ou->sigma, ou->tau_c, 0.0});
    } else {
      throw std::invalid_argument(
          "run_experiment samples noise in the time domain and supports only "
          "OU and quasi-static models; tabulated spectra and single-13C "
          "models are analytic-only");
    }
  }
  if (!plan.ou.empty()) {
    double dt = opt.trace_dt;
    if (!(dt > 0.0)) {
      double tau_min = plan.ou.front().tau_c;
      for (const auto& c : plan.ou) tau_min = std::min(tau_min, c.tau_c);
      dt = tau_min / 32.0;
    }
    plan.trace_dt = dt;
  }
  return plan;
}

// ---------------------------------------------------------------------------
// Per-run immutable context
// ---------------------------------------------------------------------------

struct RunContext {
  const PulseSequence& seq;
  const SystemConfig& sys;
  const RunOptions& opt;
  NoisePlan noise;
  double f_qubit = 0.0;
  double p_up_thermal = 0.0;
  double gamma_phi_phonon = 0.0;  ///< thermal orbital-excursion dephasing (Hz)
  std::vector<LevelGraph> laser_graphs;  ///< indexed by segment, laser only
  LevelGraph settle_graph;               ///< undriven relaxation
};

/// Relax an out-of-qubit level down to {0, 1} after a laser segment; the
/// undriven graph drains the excited and UB levels within a few tau_ub.
int settle_to_qubit(const RunContext& ctx, int level, RngStream& rng) {
  for (int tries = 0; tries < 4 && level > 1; ++tries) {
    level = run_jump_process(level, ctx.settle_graph,
                             20.0 * ctx.sys.params.tau_ub, 0.0, rng,
                             [](const JumpEvent&) {});
  }
  // Probability ~e^-80 fallback: collapse spin-conservingly.
  return level & 1;
}

int born_draw(const DensityMatrix& rho, RngStream& rng) {
  const double p_down = std::clamp(rho.rho(0, 0).real(), 0.0, 1.0);
  return rng.uniform() < p_down ? 0 : 1;
}

struct ShotOutcome {
  double counts = 0.0;
  bool bright = false;
};

// ---------------------------------------------------------------------------
// One shot of a standard (segment-walk) experiment
// ---------------------------------------------------------------------------

ShotOutcome run_shot(const RunContext& ctx,
                     const std::vector<PulseSegment>& segments,
                     std::uint64_t pid, std::uint64_t shot) {
  RngStream noise_rng(ctx.opt.seed, pid, shot, 0);
  RngStream traj_rng(ctx.opt.seed, pid, shot, 1);
  RngStream pulse_rng(ctx.opt.seed, pid, shot, 2);

  const SivParams& params = ctx.sys.params;

  // Frozen-per-shot frequency offset (Hz): quasi-static channels plus the
  // field-scaled g-factor fluctuation.
  double dqs_hz = 0.0;
  if (params.delta_g > 0.0 && ctx.sys.field.b_mag > 0.0) {
    dqs_hz += sample_quasistatic_g(params, ctx.sys.field, noise_rng) /
              constants::two_pi;
  }
  for (double sigma : ctx.noise.qs_sigmas) {
    dqs_hz += sigma * noise_rng.normal() / constants::two_pi;
  }
  std::vector<OuChannel> ou = ctx.noise.ou;
  for (auto& c : ou) c.x = c.sigma * noise_rng.normal();  // stationary start

  DensityMatrix rho;
  if (ctx.opt.ideal_init) {
    rho = DensityMatrix::pure(2, ctx.seq.qubit_init == QubitInit::kUp ? 1 : 0);
  } else {
    // Thermal qubit mixture: the initialization laser does the real work.
    rho = DensityMatrix::pure(2, 0);
    rho.rho(0, 0) = 1.0 - ctx.p_up_thermal;
    rho.rho(1, 1) = ctx.p_up_thermal;
  }

  double frame_det_hz = 0.0;  // nominal detuning of the most recent MW drive
  ShotOutcome out;

  for (std::size_t i = 0; i < segments.size(); ++i) {
    try {
      if (const auto* mw = std::get_if<MwPulse>(&segments[i])) {
        double rabi = mw->rabi_hz;
        if (ctx.opt.pulse_error_sigma > 0.0) {
          rabi = std::max(
              0.0, rabi * (1.0 + ctx.opt.pulse_error_sigma * pulse_rng.normal()));
        }
        frame_det_hz = mw->detuning_hz;
        const double det = mw->detuning_hz - dqs_hz;
        if (!ou.empty() && mw->duration_s > 0.0) {
          DephasingTrace trace;
          trace.sample_dt = ctx.noise.trace_dt;
          const auto n = static_cast<std::size_t>(
              std::ceil(mw->duration_s / trace.sample_dt)) + 1;
          trace.offsets_hz.resize(n);
          for (std::size_t k = 0; k < n; ++k) {
            double sum = 0.0;
            for (auto& c : ou) sum += c.x;
            trace.offsets_hz[k] = -sum / constants::two_pi;
            for (auto& c : ou) advance_ou(c, trace.sample_dt, noise_rng);
          }
          rho = apply_mw_pulse(rho, rabi, det, mw->phase_rad, mw->duration_s,
                               &trace);
        } else {
          rho = apply_mw_pulse(rho, rabi, det, mw->phase_rad, mw->duration_s);
        }
      } else if (const auto* wait = std::get_if<WaitSegment>(&segments[i])) {
        const double d = wait->duration_s;
        if (d > 0.0) {
          rho = qubit_wait(rho, frame_det_hz - dqs_hz, ctx.gamma_phi_phonon,
                           params.gamma_t1, d);
          if (!ou.empty()) {
            auto n = static_cast<std::size_t>(std::ceil(d / ctx.noise.trace_dt));
            n = std::max<std::size_t>(n, 4);
            if (n > 20'000'000) {
              throw std::invalid_argument(
                  "OU correlation time too short for this wait duration");
            }
            const double h = d / static_cast<double>(n);
            double phase = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
              double sum = 0.0;
              for (auto& c : ou) sum += advance_ou(c, h, noise_rng);
              phase -= sum * h;
            }
            const std::complex<double> rot(std::cos(phase), std::sin(phase));
            rho.rho(0, 1) *= rot;
            rho.rho(1, 0) = std::conj(rho.rho(0, 1));
          }
        }
      } else {
        const auto& laser = std::get<LaserPulse>(segments[i]);
        const bool is_readout = laser.role == LaserRole::kReadout;
        if (ctx.opt.ideal_init && !is_readout) continue;
        if (ctx.opt.ideal_readout && is_readout) {
          const int level = born_draw(rho, traj_rng);
          out.counts = level == 0 ? 1.0 : 0.0;
          out.bright = level == 0;
          rho = DensityMatrix::pure(2, level);
          continue;
        }
        int level = born_draw(rho, traj_rng);
        int photons = 0;
        const double eta = is_readout ? ctx.opt.eta_collect : 0.0;
        level = run_jump_process(level, ctx.laser_graphs[i], laser.duration_s,
                                 eta, traj_rng, [&photons](const JumpEvent& e) {
                                   if (e.photon) ++photons;
                                 });
        if (level > 1) level = settle_to_qubit(ctx, level, traj_rng);
        if (is_readout) {
          out.counts = photons;
          out.bright = photons > ctx.opt.threshold;
        }
        rho = DensityMatrix::pure(2, level);
      }
    } catch (const std::exception& e) {
      throw std::runtime_error("segment " + std::to_string(i) + ": " +
                               e.what());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct PointStats {
  double sum_counts = 0.0;
  double sum_counts_sq = 0.0;
  long n_bright = 0;
  long n_shots = 0;
  // Pumping only:
  double observed_time = 0.0;
  long n_flips = 0;
};

PointStats run_point_standard(const RunContext& ctx, double value) {
  const auto segments = materialize(ctx.seq, value, ctx.f_qubit);
  const std::uint64_t pid = point_id(ctx.seq.sweep_name, value);
  PointStats st;
  for (int s = 0; s < ctx.seq.shots_per_point; ++s) {
    const ShotOutcome o =
        run_shot(ctx, segments, pid, static_cast<std::uint64_t>(s));
    st.sum_counts += o.counts;
    st.sum_counts_sq += o.counts * o.counts;
    if (o.bright) ++st.n_bright;
    ++st.n_shots;
  }
  return st;
}

PointStats run_point_pumping(const RunContext& ctx, std::size_t index) {
  const PumpingCase& pc = ctx.seq.field_cases[index];
  const FieldConfig field{pc.b_mag, pc.alpha_deg};
  field.validate();
  SivParams params_case = ctx.sys.params;
  if (pc.strain_hz >= 0.0) {
    params_case.strain_x = pc.strain_hz;
    params_case.strain_y = 0.0;
  }
  const auto& laser = std::get<LaserPulse>(ctx.seq.segments.front());
  const RateSet rates =
      rate_set(params_case, field, ctx.sys.temperature_k, laser.saturation);
  const LevelGraph graph =
      build_level_graph(rates, params_case, /*drive_down=*/true,
                        params_case.offres_fraction * rates.r_scatter);
  std::uint64_t bbits;
  std::memcpy(&bbits, &pc.b_mag, sizeof bbits);
  const std::uint64_t pid = point_id(ctx.seq.sweep_name, pc.alpha_deg, bbits);

  PointStats st;
  for (int s = 0; s < ctx.seq.shots_per_point; ++s) {
    RngStream rng(ctx.opt.seed, pid, static_cast<std::uint64_t>(s), 1);
    double t_flip = -1.0;
    run_jump_process(kLbDown, graph, pc.duration_s, 0.0, rng,
                     [&t_flip](const JumpEvent& e) {
                       if (t_flip < 0.0 && (e.to & 1) != 0) t_flip = e.time;
                     });
    if (t_flip >= 0.0) {
      ++st.n_flips;
      st.observed_time += t_flip;
    } else {
      st.observed_time += pc.duration_s;
    }
    ++st.n_shots;
  }
  return st;
}

}  // namespace

DataTable run_experiment(const PulseSequence& seq, const SystemConfig& sys,
                         const std::vector<NoiseModel>& noise,
                         const RunOptions& opt) {
  seq.validate();
  sys.validate();
  if (opt.workers < 1) {
    throw std::invalid_argument("worker count must be >= 1");
  }
  if (!(opt.eta_collect >= 0.0 && opt.eta_collect <= 1.0)) {
    throw std::invalid_argument("eta_collect must be in [0, 1]");
  }
  if (opt.threshold < 0) {
    throw std::invalid_argument("threshold must be >= 0");
  }
  if (!(opt.pulse_error_sigma >= 0.0)) {
    throw std::invalid_argument("pulse_error_sigma must be >= 0");
  }

  RunContext ctx{seq, sys, opt, make_noise_plan(noise, opt), 0.0, 0.0,
                 0.0,  {},  {}};
  const LevelDiagram diagram = level_diagram(sys.params, sys.field);
  ctx.f_qubit = diagram.f_qubit;
  const double beta = constants::h_over_kb * diagram.f_qubit / sys.temperature_k;
  ctx.p_up_thermal = 1.0 / (1.0 + std::exp(beta));
  // Every jump into the upper orbital branch and back fully scrambles the
  // qubit phase (the branches precess at different rates for far longer than
  // a dwell), so thermal occupation costs coherence at the excitation rate.
  ctx.gamma_phi_phonon =
      phonon_rates(sys.params, diagram.delta_gs, sys.temperature_k).gamma_plus;

  ctx.laser_graphs.resize(seq.segments.size());
  for (std::size_t i = 0; i < seq.segments.size(); ++i) {
    if (const auto* laser = std::get_if<LaserPulse>(&seq.segments[i])) {
      const RateSet rates =
          rate_set(sys.params, sys.field, sys.temperature_k, laser->saturation);
      ctx.laser_graphs[i] = build_level_graph(
          rates, sys.params, laser->transition == LaserTransition::kDown,
          sys.params.offres_fraction * rates.r_scatter);
    }
  }
  {
    const RateSet off = rate_set(sys.params, sys.field, sys.temperature_k, 0.0);
    ctx.settle_graph = build_level_graph(off, sys.params, true, 0.0);
  }

  const std::size_t n_points = seq.sweep_values.size();
  std::vector<PointStats> stats(n_points);
  const bool pumping = seq.kind == ExperimentKind::kPumping;

  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto work = [&]() {
    for (;;) {
      const std::size_t p = next.fetch_add(1);
      if (p >= n_points) return;
      try {
        stats[p] = pumping ? run_point_pumping(ctx, p)
                           : run_point_standard(ctx, seq.sweep_values[p]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  const int n_workers =
      static_cast<int>(std::min<std::size_t>(opt.workers, n_points));
  if (n_workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  DataTable table;
  table.seed = opt.seed;
  table.columns = {seq.sweep_name,     "signal",      "error", "bright_fraction",
                   "bright_error",     "mean_counts", "shots"};
  table.cols.assign(table.columns.size(), {});
  for (auto& c : table.cols) c.reserve(n_points);
  for (std::size_t p = 0; p < n_points; ++p) {
    const PointStats& st = stats[p];
    const double n = static_cast<double>(st.n_shots);
    const double mean_counts = st.sum_counts / n;
    const double var =
        st.n_shots > 1
            ? std::max(0.0, (st.sum_counts_sq - n * mean_counts * mean_counts) /
                                (n - 1.0))
            : 0.0;
    const double counts_err = std::sqrt(var / n);
    const double frac = static_cast<double>(st.n_bright) / n;
    const double frac_err = std::sqrt(frac * (1.0 - frac) / n);

    double signal, error, bright_frac, bright_err;
    if (pumping) {
      // Censored-exponential MLE: total observed time over observed flips.
      const double flips = static_cast<double>(st.n_flips);
      signal = st.n_flips > 0 ? st.observed_time / flips : st.observed_time;
      error = st.n_flips > 0 ? signal / std::sqrt(flips) : signal;
      bright_frac = flips / n;
      bright_err = std::sqrt(bright_frac * (1.0 - bright_frac) / n);
    } else if (opt.ideal_readout) {
      signal = frac;
      error = frac_err;
      bright_frac = frac;
      bright_err = frac_err;
    } else {
      signal = mean_counts;
      error = counts_err;
      bright_frac = frac;
      bright_err = frac_err;
    }
    table.cols[0].push_back(seq.sweep_values[p]);
    table.cols[1].push_back(signal);
    table.cols[2].push_back(error);
    table.cols[3].push_back(bright_frac);
    table.cols[4].push_back(bright_err);
    table.cols[5].push_back(mean_counts);
    table.cols[6].push_back(n);
  }
  table.validate();
  return table;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void write_csv(const DataTable& table, const std::string& path) {
  table.validate();
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) {
    os << (i ? "," : "") << table.columns[i];
  }
  os << "\r\n";
  for (std::size_t r = 0; r < table.n_rows(); ++r) {
    for (std::size_t c = 0; c < table.cols.size(); ++c) {
      os << (c ? "," : "") << format_double(table.cols[c][r]);
    }
    os << "\r\n";
  }
  if (!os) {
    throw std::runtime_error("write to " + path + " failed");
  }
}

}  // namespace sivsim
