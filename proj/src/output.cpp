#include "sivsim/output.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "json.hpp"
#include "sivsim/fits.hpp"
#include "sivsim/format.hpp"
#include "sivsim/readout.hpp"
#include "sivsim/rng.hpp"
#include "sivsim/siv_model.hpp"

namespace sivsim {

namespace {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Plotting: a small static SVG, enough to eyeball a run
// ---------------------------------------------------------------------------

constexpr double kW = 640.0, kH = 420.0;
constexpr double kL = 72.0, kR = 24.0, kT = 42.0, kB = 52.0;

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

/// Log axes engage when the data are positive and span > 1.5 decades.
bool wants_log(const std::vector<double>& v) {
  double lo = *std::min_element(v.begin(), v.end());
  double hi = *std::max_element(v.begin(), v.end());
  return lo > 0.0 && hi / lo > 30.0;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  void fit(const std::vector<double>& v, bool want_log) {
    log = want_log;
    lo = *std::min_element(v.begin(), v.end());
    hi = *std::max_element(v.begin(), v.end());
    if (log) {
      lo = std::log10(lo);
      hi = std::log10(hi);
    }
    if (hi == lo) {
      lo -= 0.5;
      hi += 0.5;
    }
    double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  double t(double v) const {
    double u = log ? std::log10(v) : v;
    return (u - lo) / (hi - lo);
  }
  double untransform(double u) const { return log ? std::pow(10.0, u) : u; }
};

void svg_open(std::ofstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" viewBox=\"0 0 " << kW << " " << kH
     << "\">\n"
     << "<rect width=\"" << kW << "\" height=\"" << kH
     << "\" fill=\"white\"/>\n"
     << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" "
        "font-family=\"sans-serif\" font-size=\"15\">"
     << title << "</text>\n";
}

void svg_axes(std::ofstream& os, const Axis& ax, const Axis& ay,
              const std::string& xlabel, const std::string& ylabel) {
  os << "<rect x=\"" << kL << "\" y=\"" << kT << "\" width=\"" << kW - kL - kR
     << "\" height=\"" << kH - kT - kB
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    double f = i / 4.0;
    double px = kL + f * (kW - kL - kR);
    double py = kH - kB - f * (kH - kT - kB);
    double xv = ax.untransform(ax.lo + f * (ax.hi - ax.lo));
    double yv = ay.untransform(ay.lo + f * (ay.hi - ay.lo));
    os << "<line x1=\"" << px << "\" y1=\"" << kH - kB << "\" x2=\"" << px
       << "\" y2=\"" << kH - kB + 5 << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << px << "\" y=\"" << kH - kB + 18
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << tick_label(xv) << "</text>\n"
       << "<line x1=\"" << kL - 5 << "\" y1=\"" << py << "\" x2=\"" << kL
       << "\" y2=\"" << py << "\" stroke=\"black\"/>\n"
       << "<text x=\"" << kL - 8 << "\" y=\"" << py + 4
       << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
          "font-size=\"11\">"
       << tick_label(yv) << "</text>\n";
  }
  os << "<text x=\"" << (kL + kW - kR) / 2 << "\" y=\"" << kH - 12
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\">"
     << xlabel << "</text>\n"
     << "<text x=\"16\" y=\"" << (kT + kH - kB) / 2
     << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
        "font-size=\"13\" transform=\"rotate(-90 16 "
     << (kT + kH - kB) / 2 << ")\">" << ylabel << "</text>\n";
}

void write_svg_xy(const std::string& path, const std::vector<double>& xs,
                  const std::vector<double>& ys, const std::string& xlabel,
                  const std::string& ylabel, const std::string& title) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  Axis ax, ay;
  ax.fit(xs, wants_log(xs));
  ay.fit(ys, false);
  svg_open(os, title);
  svg_axes(os, ax, ay, xlabel + std::string(ax.log ? " (log)" : ""), ylabel);
  auto px = [&](double v) { return kL + ax.t(v) * (kW - kL - kR); };
  auto py = [&](double v) { return kH - kB - ay.t(v) * (kH - kT - kB); };
  os << "<polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"1.5\" "
        "points=\"";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << px(xs[i]) << "," << py(ys[i]) << " ";
  }
  os << "\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    os << "<circle cx=\"" << px(xs[i]) << "\" cy=\"" << py(ys[i])
       << "\" r=\"2.5\" fill=\"#1f77b4\"/>\n";
  }
  os << "</svg>\n";
}

void write_svg_histogram(const std::string& path, const CountHistogram& hist,
                         const std::string& title) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  int max_freq = 1;
  for (std::size_t i = 0; i < hist.bin_values.size(); ++i) {
    max_freq = std::max({max_freq, hist.freq_down[i], hist.freq_up[i]});
  }
  Axis ax, ay;
  ax.lo = hist.bin_values.front() - 1.0;
  ax.hi = hist.bin_values.back() + 1.0;
  ay.lo = 0.0;
  ay.hi = 1.05 * max_freq;
  svg_open(os, title);
  svg_axes(os, ax, ay, "photon count", "shots");
  auto px = [&](double v) { return kL + ax.t(v) * (kW - kL - kR); };
  auto py = [&](double v) { return kH - kB - ay.t(v) * (kH - kT - kB); };
  double half = 0.4 * (px(1.0) - px(0.0));
  for (std::size_t i = 0; i < hist.bin_values.size(); ++i) {
    double c = px(hist.bin_values[i]);
    double y0 = py(0.0);
    double yd = py(hist.freq_down[i]);
    double yu = py(hist.freq_up[i]);
    os << "<rect x=\"" << c - half << "\" y=\"" << yd << "\" width=\"" << half
       << "\" height=\"" << y0 - yd
       << "\" fill=\"#1f77b4\" fill-opacity=\"0.8\"/>\n"
       << "<rect x=\"" << c << "\" y=\"" << yu << "\" width=\"" << half
       << "\" height=\"" << y0 - yu
       << "\" fill=\"#d62728\" fill-opacity=\"0.8\"/>\n";
  }
  os << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 18
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
        "fill=\"#1f77b4\">init down</text>\n"
     << "<text x=\"" << kW - kR - 8 << "\" y=\"" << kT + 34
     << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
        "fill=\"#d62728\">init up</text>\n"
     << "</svg>\n";
}

// ---------------------------------------------------------------------------
// Summary helpers
// ---------------------------------------------------------------------------

/// Peak center and FWHM from half-maximum crossings (linear interpolation);
/// fwhm = 0 when the curve never drops through the half level.
struct PeakInfo {
  double center = 0.0;
  double fwhm = 0.0;
  double height = 0.0;
  double base = 0.0;
};

PeakInfo peak_stats(const std::vector<double>& x, const std::vector<double>& y) {
  PeakInfo p;
  std::size_t imax = std::max_element(y.begin(), y.end()) - y.begin();
  p.height = y[imax];
  p.base = *std::min_element(y.begin(), y.end());
  p.center = x[imax];
  double half = 0.5 * (p.height + p.base);
  auto cross = [&](std::size_t a, std::size_t b) {
    double f = (half - y[a]) / (y[b] - y[a]);
    return x[a] + f * (x[b] - x[a]);
  };
  double left = x.front(), right = x.back();
  bool have_left = false, have_right = false;
  for (std::size_t i = imax; i > 0; --i) {
    if (y[i - 1] < half && y[i] >= half) {
      left = cross(i - 1, i);
      have_left = true;
      break;
    }
  }
  for (std::size_t i = imax; i + 1 < y.size(); ++i) {
    if (y[i] >= half && y[i + 1] < half) {
      right = cross(i + 1, i);
      have_right = true;
      break;
    }
  }
  if (have_left && have_right) {
    p.fwhm = right - left;
    p.center = 0.5 * (left + right);
  }
  return p;
}

void put_fit_meta(json& j, const FitResult& fit) {
  j["fit_converged"] = fit.converged;
  if (!fit.converged && !fit.message.empty()) j["fit_message"] = fit.message;
}

// ---------------------------------------------------------------------------
// Per-experiment engines
// ---------------------------------------------------------------------------

void summarize_sequence(const ExperimentConfig& cfg, const DataTable& table,
                        json& j) {
  const ExperimentSpec& e = cfg.experiment;
  const std::vector<double>& x = table.cols[0];
  const std::vector<double>& bright = table.column("bright_fraction");
  if (e.kind == "odmr") {
    PeakInfo p = peak_stats(x, bright);
    j["f_peak_hz"] = p.center;
    j["fwhm_hz"] = p.fwhm;
    j["contrast"] = p.height - p.base;
    j["f_qubit_hz"] =
        level_diagram(cfg.system.params, cfg.system.field).f_qubit;
  } else if (e.kind == "rabi") {
    FitResult fit = fit_oscillation(x, bright, {});
    put_fit_meta(j, fit);
    if (fit.converged) {
      j["rabi_fit_hz"] = fit.value("frequency");
      j["rabi_sigma_hz"] = fit.sigma("frequency");
      j["pi_time_s"] = 0.5 / fit.value("frequency");
    }
  } else if (e.kind == "ramsey") {
    FitResult fit = fit_oscillation(x, bright, {}, OscillationModel{2.0});
    put_fit_meta(j, fit);
    if (fit.converged) {
      j["fringe_fit_hz"] = fit.value("frequency");
      j["fringe_sigma_hz"] = fit.sigma("frequency");
      j["t2_star_s"] = fit.value("tau");
      j["t2_star_sigma_s"] = fit.sigma("tau");
    }
  } else if (e.kind == "cpmg") {
    DecayModel model;
    if (e.fit_exponent > 0.0) {
      model.p = e.fit_exponent;
    } else {
      model.p = 3.0;
      model.p_free = true;
    }
    FitResult fit = fit_decay(x, bright, {}, model);
    put_fit_meta(j, fit);
    j["n_pulses"] = e.n_pulses;
    if (fit.converged) {
      j["t2_s"] = fit.value("t2");
      j["t2_sigma_s"] = fit.sigma("t2");
      j["stretch_p"] = model.p_free ? fit.value("p") : e.fit_exponent;
      j["stretch_p_sigma"] = model.p_free ? fit.sigma("p") : 0.0;
    }
  } else if (e.kind == "t1") {
    FitResult fit = fit_decay(x, bright, {});
    put_fit_meta(j, fit);
    if (fit.converged) {
      j["t1_s"] = fit.value("t2");
      j["t1_sigma_s"] = fit.sigma("t2");
    }
  } else if (e.kind == "pumping") {
    json alpha = json::array(), bmag = json::array();
    for (const PumpingCase& c : e.cases) {
      alpha.push_back(c.alpha_deg);
      bmag.push_back(c.b_mag);
    }
    j["alpha_deg"] = alpha;
    j["b_mag_g"] = bmag;
    j["tau_pump_s"] = table.column("signal");
    j["tau_sigma_s"] = table.column("error");
  }
}

void plot_sequence(const ExperimentConfig& cfg, const DataTable& table,
                   const std::string& path) {
  const ExperimentSpec& e = cfg.experiment;
  if (e.kind == "pumping") {
    std::vector<double> alpha;
    for (const PumpingCase& c : e.cases) alpha.push_back(c.alpha_deg);
    std::vector<double> tau = table.column("signal");
    // log-y via plotting log10(tau): pumping times span five decades
    std::vector<double> logt(tau.size());
    for (std::size_t i = 0; i < tau.size(); ++i) {
      logt[i] = std::log10(std::max(tau[i], 1e-12));
    }
    write_svg_xy(path, alpha, logt, "alpha (deg)", "log10 tau_pump (s)",
                 "optical pumping time vs field angle");
    return;
  }
  write_svg_xy(path, table.cols[0], table.column("bright_fraction"),
               table.columns[0], "bright fraction", e.kind);
}

CountHistogram run_histogram(const ExperimentConfig& cfg) {
  const ExperimentSpec& e = cfg.experiment;
  const SivParams& params = cfg.system.params;
  RateSet rates = rate_set(params, cfg.system.field, cfg.system.temperature_k,
                           e.saturation);
  double r_offres = params.offres_fraction * rates.r_scatter;
  int n = cfg.shots;
  if (n < 1) throw std::invalid_argument("shots must be >= 1");
  std::vector<int> down(n), up(n);
  for (int i = 0; i < n; ++i) {
    RngStream rng_d(cfg.run.seed, point_id("readout_histogram", 0.0), i, 0);
    RngStream rng_u(cfg.run.seed, point_id("readout_histogram", 1.0), i, 0);
    down[i] = simulate_readout_window(0, rates, params, e.window_s,
                                      cfg.run.eta_collect, r_offres, rng_d);
    up[i] = simulate_readout_window(1, rates, params, e.window_s,
                                    cfg.run.eta_collect, r_offres, rng_u);
  }
  return build_histograms(down, up, e.window_s);
}

void summarize_histogram(const ExperimentConfig& cfg,
                         const CountHistogram& hist, json& j) {
  const SivParams& params = cfg.system.params;
  RateSet rates = rate_set(params, cfg.system.field, cfg.system.temperature_k,
                           cfg.experiment.saturation);
  ThresholdFidelity tf = threshold_fidelity(hist, cfg.run.threshold);
  auto [t_opt, f_opt] = optimal_threshold(hist);
  j["n_down_mean"] = histogram_mean(hist, true);
  j["n_up_mean"] = histogram_mean(hist, false);
  j["threshold"] = cfg.run.threshold;
  j["f_down"] = tf.f_down;
  j["f_up"] = tf.f_up;
  j["f_avg"] = tf.f_avg;
  j["optimal_threshold"] = t_opt;
  j["f_avg_optimal"] = f_opt;
  j["ub_duty_loss"] = ub_duty_loss(rates, params);
}

DataTable run_ple(const ExperimentConfig& cfg, json& j) {
  const ExperimentSpec& e = cfg.experiment;
  LevelDiagram diagram = level_diagram(cfg.system.params, cfg.system.field);
  j["delta_gs_ghz"] = diagram.delta_gs / 1e9;
  DataTable table;
  table.seed = cfg.run.seed;
  if (!e.temperatures_k.empty()) {
    // Boltzmann thermalization: noisy D/C intensity ratio vs temperature.
    if (e.temperatures_k.size() < 2) {
      throw std::invalid_argument(
          "ple needs >= 2 temperatures for a Boltzmann fit");
    }
    std::vector<double> ratios, errs;
    for (double t_k : e.temperatures_k) {
      double r0 = ple_ratio(diagram.delta_gs, t_k);
      RngStream rng(cfg.run.seed, point_id("ple", t_k), 0, 0);
      ratios.push_back(r0 * (1.0 + e.ratio_noise * rng.normal()));
      errs.push_back(e.ratio_noise * r0);
    }
    table.columns = {"temperature_k", "ratio", "ratio_error"};
    table.cols = {e.temperatures_k, ratios, errs};
    FitResult fit = fit_boltzmann(e.temperatures_k, ratios, errs);
    put_fit_meta(j, fit);
    if (fit.converged) {
      j["delta_fit_ghz"] = fit.value("delta") / 1e9;
      j["delta_fit_sigma_ghz"] = fit.sigma("delta") / 1e9;
    }
  } else {
    auto spectrum = ple_spectrum(cfg.system.params, cfg.system.field,
                                 cfg.system.temperature_k, e.linewidth_hz);
    std::vector<double> f, intensity;
    for (const auto& [fi, si] : spectrum) {
      f.push_back(fi);
      intensity.push_back(si);
    }
    table.columns = {"detuning_hz", "intensity"};
    table.cols = {f, intensity};
    j["peak_ratio"] =
        ple_ratio(diagram.delta_gs, cfg.system.temperature_k);
  }
  table.validate();
  return table;
}

}  // namespace

RunArtifacts run_to_directory(const ExperimentConfig& cfg,
                              const std::string& out_dir) {
  namespace fs = std::filesystem;
  cfg.system.validate();
  fs::create_directories(out_dir);
  RunArtifacts art;
  art.out_dir = out_dir;
  art.data_csv = (fs::path(out_dir) / "data.csv").string();
  art.summary_json = (fs::path(out_dir) / "summary.json").string();
  std::string plot_path = (fs::path(out_dir) / "plot.svg").string();

  json j;
  j["experiment"] = cfg.experiment.kind;
  j["seed"] = cfg.run.seed;
  j["shots"] = cfg.shots;
  j["workers"] = cfg.run.workers;
  j["config"] = canonical_config_text(cfg);
  j["data_csv"] = "data.csv";

  auto t0 = std::chrono::steady_clock::now();
  const std::string& kind = cfg.experiment.kind;
  if (kind == "readout_histogram") {
    CountHistogram hist = run_histogram(cfg);
    write_histogram_csv(hist, art.data_csv);
    summarize_histogram(cfg, hist, j);
    if (cfg.plot) {
      write_svg_histogram(plot_path, hist, "single-shot readout histograms");
      art.plot_svg = plot_path;
    }
  } else if (kind == "ple") {
    DataTable table = run_ple(cfg, j);
    write_csv(table, art.data_csv);
    if (cfg.plot) {
      write_svg_xy(plot_path, table.cols[0], table.cols[1], table.columns[0],
                   table.columns[1], "ple");
      art.plot_svg = plot_path;
    }
  } else {
    DataTable table =
        run_experiment(build_sequence(cfg), cfg.system, cfg.noise, cfg.run);
    write_csv(table, art.data_csv);
    summarize_sequence(cfg, table, j);
    if (cfg.plot) {
      plot_sequence(cfg, table, plot_path);
      art.plot_svg = plot_path;
    }
  }
  std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
  j["wall_time_s"] = dt.count();

  std::ofstream os(art.summary_json, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open " + art.summary_json +
                             " for writing");
  }
  os << j.dump(2) << "\n";
  if (!os) throw std::runtime_error("write to " + art.summary_json + " failed");
  return art;
}

}  // namespace sivsim
