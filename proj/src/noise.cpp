#include "sivsim/noise.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "sivsim/constants.hpp"
#include "sivsim/kernels.hpp"

namespace sivsim {

namespace {

/// Lorentzian OU spectrum S(w) = 2 sigma^2 tau_c / (1 + w^2 tau_c^2).
double ou_spectrum(const OuModel& m, double omega) {
  const double wt = omega * m.tau_c;
  return 2.0 * m.sigma * m.sigma * m.tau_c / (1.0 + wt * wt);
}

/// Linear interpolation on the table, zero outside its range.
double tabulated_spectrum(const TabulatedModel& m, double omega) {
  if (omega < m.omega.front() || omega > m.omega.back()) return 0.0;
  const auto it =
      std::upper_bound(m.omega.begin(), m.omega.end(), omega);
  if (it == m.omega.begin()) return m.s_of_omega.front();
  if (it == m.omega.end()) return m.s_of_omega.back();
  const std::size_t hi = static_cast<std::size_t>(it - m.omega.begin());
  const std::size_t lo = hi - 1;
  const double frac = (omega - m.omega[lo]) / (m.omega[hi] - m.omega[lo]);
  return m.s_of_omega[lo] + frac * (m.s_of_omega[hi] - m.s_of_omega[lo]);
}

/// F(w)/w^2 with the removable w -> 0 singularity evaluated by series.
double filter_over_w2(int n_pulses, double total_time, double omega) {
  if (omega == 0.0) {
    // Free evolution tends to T^2/2; any echo sequence vanishes at dc.
    return n_pulses == 0 ? 0.5 * total_time * total_time : 0.0;
  }
  return cpmg_filter(n_pulses, total_time, omega) / (omega * omega);
}

struct Quad {
  int n_pulses;
  double total_time;
  const OuModel* ou;               // exactly one of ou / tab is set
  const TabulatedModel* tab;

  /// (1/pi) S(w) F(w)/w^2 — integrates directly to chi.
  double integrand(double omega) const {
    const double s =
        ou != nullptr ? ou_spectrum(*ou, omega) : tabulated_spectrum(*tab, omega);
    return s * filter_over_w2(n_pulses, total_time, omega) / constants::pi;
  }
};

/// Adaptive Simpson on [a,b]: refine until the Richardson error estimate is
/// below tol, then return the extrapolated value.  Depth-limited; failures
/// surface through the converged flag.
double adaptive_simpson(const Quad& q, double a, double b, double fa,
                        double fm, double fb, double whole, double tol,
                        int depth, bool* converged) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = q.integrand(lm);
  const double frm = q.integrand(rm);
  const double h6 = (b - a) / 12.0;
  const double left = h6 * (fa + 4.0 * flm + fm);
  const double right = h6 * (fm + 4.0 * frm + fb);
  const double err = left + right - whole;
  if (std::abs(err) <= 15.0 * tol) return left + right + err / 15.0;
  if (depth <= 0) {
    *converged = false;
    return left + right;
  }
  return adaptive_simpson(q, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1,
                          converged) +
         adaptive_simpson(q, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1,
                          converged);
}

/// Integrate q.integrand over [a,b] split into panels no wider than `panel`
/// (so each adaptive call sees at most a couple of filter oscillations).
/// tol_per_unit = 0 skips refinement (coarse composite-Simpson estimate).
double integrate_range(const Quad& q, double a, double b, double panel,
                       double tol_per_unit, bool* converged) {
  double total = 0.0;
  const std::size_t n_panels = static_cast<std::size_t>(
      std::max(1.0, std::ceil((b - a) / panel)));
  for (std::size_t k = 0; k < n_panels; ++k) {
    const double pa = a + (b - a) * static_cast<double>(k) /
                              static_cast<double>(n_panels);
    const double pb = a + (b - a) * static_cast<double>(k + 1) /
                              static_cast<double>(n_panels);
    const double fa = q.integrand(pa);
    const double fm = q.integrand(0.5 * (pa + pb));
    const double fb = q.integrand(pb);
    const double whole = (pb - pa) / 6.0 * (fa + 4.0 * fm + fb);
    total += tol_per_unit == 0.0
                 ? whole
                 : adaptive_simpson(q, pa, pb, fa, fm, fb, whole,
                                    tol_per_unit * (pb - pa), 20, converged);
  }
  return total;
}

/// Meiboom-Gill segment lengths for n_pulses ideal pi pulses in total_time:
/// tau/2, tau, ..., tau, tau/2 (n_pulses + 1 entries); just {T} when 0.
std::vector<double> mg_segments(int n_pulses, double total_time) {
  if (n_pulses == 0) return {total_time};
  const double tau = total_time / n_pulses;
  std::vector<double> seg(static_cast<std::size_t>(n_pulses) + 1, tau);
  seg.front() = 0.5 * tau;
  seg.back() = 0.5 * tau;
  return seg;
}

}  // namespace

void validate_noise(const NoiseModel& model) {
  if (const auto* ou = std::get_if<OuModel>(&model)) {
    if (!(ou->sigma > 0.0) || !std::isfinite(ou->sigma))
      throw std::invalid_argument("noise: OU sigma must be positive");
    if (!(ou->tau_c > 0.0) || !std::isfinite(ou->tau_c))
      throw std::invalid_argument("noise: OU tau_c must be positive");
  } else if (const auto* qs = std::get_if<QuasiStaticModel>(&model)) {
    if (!(qs->sigma >= 0.0) || !std::isfinite(qs->sigma))
      throw std::invalid_argument("noise: quasi-static sigma must be >= 0");
  } else if (const auto* tab = std::get_if<TabulatedModel>(&model)) {
    if (tab->omega.size() < 2)
      throw std::invalid_argument("noise: tabulated spectrum needs >= 2 points");
    if (tab->omega.size() != tab->s_of_omega.size())
      throw std::invalid_argument("noise: tabulated column length mismatch");
    if (!(tab->omega.front() >= 0.0))
      throw std::invalid_argument("noise: tabulated omega must be >= 0");
    for (std::size_t i = 1; i < tab->omega.size(); ++i)
      if (!(tab->omega[i] > tab->omega[i - 1]))
        throw std::invalid_argument(
            "noise: tabulated omega must be strictly increasing");
    for (double s : tab->s_of_omega)
      if (!(s >= 0.0) || !std::isfinite(s))
        throw std::invalid_argument("noise: tabulated S(omega) must be >= 0");
  } else if (const auto* c13 = std::get_if<SingleC13Model>(&model)) {
    if (!(c13->b_mag > 0.0))
      throw std::invalid_argument("noise: 13C model needs b_mag > 0");
    if (!std::isfinite(c13->a_par) || !std::isfinite(c13->a_perp))
      throw std::invalid_argument("noise: 13C hyperfine must be finite");
  }
}

std::vector<double> sample_ou(const OuModel& model, double dt_s,
                              std::size_t n_steps, RngStream& rng) {
  validate_noise(NoiseModel{model});
  if (!(dt_s > 0.0)) throw std::invalid_argument("sample_ou: dt must be > 0");
  if (n_steps == 0) return {};
  const double decay = std::exp(-dt_s / model.tau_c);
  const double amp = model.sigma * std::sqrt(1.0 - decay * decay);
  std::vector<double> x(n_steps);
  x[0] = model.sigma * rng.normal();
  for (std::size_t k = 1; k < n_steps; ++k)
    x[k] = x[k - 1] * decay + amp * rng.normal();
  return x;
}

double sample_quasistatic_g(const SivParams& params, const FieldConfig& field,
                            RngStream& rng) {
  params.validate();
  field.validate();
  const double sigma = constants::two_pi * params.delta_g *
                       constants::mu_b_over_h * field.b_mag;
  return sigma * rng.normal();
}

double cpmg_filter(int n_pulses, double total_time_s, double omega_rad_s) {
  if (n_pulses < 0)
    throw std::invalid_argument("cpmg_filter: n_pulses must be >= 0");
  if (!(total_time_s > 0.0))
    throw std::invalid_argument("cpmg_filter: total_time must be > 0");
  const double wt = omega_rad_s * total_time_s;
  if (n_pulses == 0) {
    const double s = std::sin(0.5 * wt);
    return 2.0 * s * s;
  }
  const double n = static_cast<double>(n_pulses);
  const double x = 0.5 * wt / n;  // omega * tau / 2 with tau = T/N
  const double s4 = std::sin(0.5 * x);
  const double base = 8.0 * s4 * s4 * s4 * s4;
  // P / cos^2(x) has removable singularities at the zeros of cos(x).  Near
  // them, write x = x0 + d: both numerator and denominator reduce to
  // sin-of-distance factors and the ratio is exactly (sin(N d)/sin(d))^2,
  // which is well conditioned (limit N^2 as d -> 0).
  const double c = std::cos(x);
  if (std::abs(c) < 0.1) {
    const double x0 =
        (std::floor((x - 0.5 * constants::pi) / constants::pi + 0.5) + 0.5) *
        constants::pi;
    const double d = x - x0;
    const double sd = std::sin(d);
    const double ratio = sd == 0.0 ? n : std::sin(n * d) / sd;
    return base * ratio * ratio;
  }
  const double p = n_pulses % 2 == 0 ? std::sin(0.5 * wt) : std::cos(0.5 * wt);
  return base * p * p / (c * c);
}

double coherence_decay(const NoiseModel& model, int n_pulses,
                       double total_time_s) {
  validate_noise(model);
  if (n_pulses < 0)
    throw std::invalid_argument("coherence_decay: n_pulses must be >= 0");
  if (total_time_s < 0.0)
    throw std::invalid_argument("coherence_decay: total_time must be >= 0");
  if (total_time_s == 0.0) return 1.0;

  Quad q{n_pulses, total_time_s, nullptr, nullptr};
  if (const auto* ou = std::get_if<OuModel>(&model)) {
    q.ou = ou;
  } else if (const auto* tab = std::get_if<TabulatedModel>(&model)) {
    q.tab = tab;
  } else {
    throw std::invalid_argument(
        "coherence_decay: model must be OU or Tabulated");
  }

  // The integrand oscillates no faster than sin(w T / 2); a panel of pi/T
  // covers half a period, which keeps the base Simpson estimate sane.  A
  // cheap unrefined pass first fixes the magnitude so the adaptive tolerance
  // can be genuinely relative.
  const double panel = constants::pi / total_time_s;
  bool converged = true;
  double chi = 0.0;
  if (q.tab != nullptr) {
    // Outside the tabulated range the spectrum is defined as zero, so the
    // integral truncates exactly at the table edges.  Integrate each table
    // interval separately: the interpolant's kinks then sit on panel
    // boundaries instead of inside a Simpson stencil.
    const double span = q.tab->omega.back() - q.tab->omega.front();
    double coarse = 0.0;
    for (std::size_t i = 0; i + 1 < q.tab->omega.size(); ++i)
      coarse += integrate_range(q, q.tab->omega[i], q.tab->omega[i + 1],
                                panel, 0.0, &converged);
    if (coarse <= 0.0) return 1.0;  // spectrum (or its overlap) vanishes
    const double tol_per_unit = 1e-8 * coarse / span;
    for (std::size_t i = 0; i + 1 < q.tab->omega.size(); ++i)
      chi += integrate_range(q, q.tab->omega[i], q.tab->omega[i + 1], panel,
                             tol_per_unit, &converged);
  } else {
    // OU: integrate to a cutoff, then extend in octaves until the analytic
    // tail bound is negligible.  For w >> 1/tau_c the integrand is below
    // (1/pi)·8 N^2 · 2 sigma^2/(tau_c w^4) (the singular-point limit of the
    // filter is N^2), so the tail beyond W is under
    // 16 N^2 sigma^2/(3 pi tau_c W^3).
    const double n_eff = std::max(1, n_pulses);
    const double w_char = std::max({1.0 / q.ou->tau_c,
                                    2.0 * n_eff / total_time_s, panel});
    const double tail_coef = 16.0 * n_eff * n_eff * q.ou->sigma *
                             q.ou->sigma /
                             (3.0 * constants::pi * q.ou->tau_c);
    double hi = 8.0 * w_char;
    const double coarse =
        integrate_range(q, 0.0, hi, panel, 0.0, &converged);
    const double scale = std::max(coarse, 1e-300);
    const double tol_per_unit = 1e-8 * scale / hi;
    chi = integrate_range(q, 0.0, hi, panel, tol_per_unit, &converged);
    double tail_bound = tail_coef / (hi * hi * hi);
    while (tail_bound > 1e-8 * std::max(chi, scale)) {
      const double next = 2.0 * hi;
      chi += integrate_range(q, hi, next, panel, tol_per_unit, &converged);
      hi = next;
      tail_bound = tail_coef / (hi * hi * hi);
      if (hi > 1e9 * w_char)
        throw std::runtime_error(
            "coherence_decay: quadrature tail failed to converge");
    }
  }
  if (!converged)
    throw std::runtime_error("coherence_decay: quadrature did not reach the "
                             "requested relative accuracy");
  return std::exp(-chi);
}

double mc_coherence(const NoiseModel& model, int n_pulses, double total_time_s,
                    std::size_t n_shots, double dt_s, std::uint64_t seed,
                    std::uint64_t point_id) {
  validate_noise(model);
  if (n_pulses < 0 || !(total_time_s > 0.0) || n_shots == 0)
    throw std::invalid_argument("mc_coherence: bad sequence arguments");

  if (std::holds_alternative<QuasiStaticModel>(model)) {
    // The toggled time integral is analytic: T for free evolution and
    // exactly zero for any Meiboom-Gill echo train.
    const double sigma = std::get<QuasiStaticModel>(model).sigma;
    double w = 0.0;
    double sign = 1.0;
    for (double seg : mg_segments(n_pulses, total_time_s)) {
      w += sign * seg;
      sign = -sign;
    }
    double acc = 0.0;
    for (std::size_t shot = 0; shot < n_shots; ++shot) {
      RngStream rng(seed, point_id, shot, 0);
      acc += std::cos(sigma * rng.normal() * w);
    }
    return acc / static_cast<double>(n_shots);
  }

  const auto* ou = std::get_if<OuModel>(&model);
  if (ou == nullptr)
    throw std::invalid_argument("mc_coherence: model must be OU or QuasiStatic");
  if (!(dt_s > 0.0))
    throw std::invalid_argument("mc_coherence: dt must be > 0");

  const auto& kt = kernels::active();
  constexpr std::size_t kLanes = 256;
  const std::vector<double> segments = mg_segments(n_pulses, total_time_s);

  double acc = 0.0;
  std::vector<RngStream> streams;
  std::vector<double> x(kLanes), phi(kLanes), xi(kLanes);
  streams.reserve(kLanes);
  for (std::size_t base = 0; base < n_shots; base += kLanes) {
    const std::size_t lanes = std::min(kLanes, n_shots - base);
    streams.clear();
    for (std::size_t i = 0; i < lanes; ++i)
      streams.emplace_back(seed, point_id, base + i, 0);
    for (std::size_t i = 0; i < lanes; ++i)
      x[i] = ou->sigma * streams[i].normal();
    std::fill(phi.begin(), phi.begin() + static_cast<std::ptrdiff_t>(lanes),
              0.0);
    double sign = 1.0;
    for (double seg : segments) {
      const std::size_t steps =
          std::max<std::size_t>(1, static_cast<std::size_t>(
                                       std::llround(seg / dt_s)));
      const double h = seg / static_cast<double>(steps);
      const double decay = std::exp(-h / ou->tau_c);
      const double amp = ou->sigma * std::sqrt(1.0 - decay * decay);
      for (std::size_t k = 0; k < steps; ++k) {
        for (std::size_t i = 0; i < lanes; ++i) xi[i] = streams[i].normal();
        kt.ou_phase_step(lanes, decay, amp, xi.data(), x.data(), sign * h,
                         phi.data());
      }
      sign = -sign;
    }
    for (std::size_t i = 0; i < lanes; ++i) acc += std::cos(phi[i]);
  }
  return acc / static_cast<double>(n_shots);
}

double eseem_echo(const SingleC13Model& model, double tau_s) {
  validate_noise(NoiseModel{model});
  if (tau_s < 0.0) throw std::invalid_argument("eseem_echo: tau must be >= 0");
  const double w_i = constants::two_pi * constants::gamma_c13 * model.b_mag;
  const double a = constants::two_pi * model.a_par;
  const double b = constants::two_pi * model.a_perp;
  const double w_alpha = std::hypot(w_i + 0.5 * a, 0.5 * b);
  const double w_beta = std::hypot(w_i - 0.5 * a, 0.5 * b);
  if (w_alpha == 0.0 || w_beta == 0.0) return 1.0;
  const double k = std::pow(b * w_i / (w_alpha * w_beta), 2);
  return 1.0 - 0.25 * k * (1.0 - std::cos(w_alpha * tau_s)) *
                   (1.0 - std::cos(w_beta * tau_s));
}

TabulatedModel load_spectrum(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw std::runtime_error("load_spectrum: cannot open '" + path + "'");
  TabulatedModel model;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream row(line);
    double omega = 0.0;
    double s = 0.0;
    if (!(row >> omega)) continue;  // blank or comment-only line
    if (!(row >> s))
      throw std::runtime_error("load_spectrum: " + path + ":" +
                               std::to_string(line_no) +
                               ": expected two columns");
    std::string extra;
    if (row >> extra)
      throw std::runtime_error("load_spectrum: " + path + ":" +
                               std::to_string(line_no) +
                               ": trailing token '" + extra + "'");
    model.omega.push_back(omega);
    model.s_of_omega.push_back(s);
  }
  try {
    validate_noise(NoiseModel{model});
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error("load_spectrum: " + path + ": " + e.what());
  }
  return model;
}

}  // namespace sivsim
