#include "sivsim/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "sivsim/format.hpp"
#include "sivsim/siv_model.hpp"

namespace sivsim {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " +
                              msg);
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

/// SI suffix multiplier; 0 for an unknown suffix (0 is never a valid one).
double unit_multiplier(const std::string& s) {
  if (s == "GHz") return 1e9;
  if (s == "MHz") return 1e6;
  if (s == "kHz") return 1e3;
  if (s == "Hz") return 1.0;
  if (s == "s") return 1.0;
  if (s == "ms") return 1e-3;
  if (s == "us") return 1e-6;
  if (s == "ns") return 1e-9;
  if (s == "K") return 1.0;
  if (s == "mK") return 1e-3;
  if (s == "kG") return 1e3;
  if (s == "G") return 1.0;
  if (s == "deg") return 1.0;
  return 0.0;
}

/// Whitespace-separated quantities.  A suffix may be attached ("2.7kG") or
/// stand alone, in which case it scales the preceding number ("2.7 kG").
std::vector<double> parse_quantities(const std::string& value, int line) {
  std::vector<double> out;
  bool last_bare = false;  // previous token was a number with no suffix yet
  std::istringstream is(value);
  std::string tok;
  while (is >> tok) {
    double v = 0.0;
    auto [ptr, ec] =
        std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec == std::errc() && ptr != tok.data()) {
      std::string suffix(ptr);  // tok's buffer is NUL-terminated
      double mult = 1.0;
      if (!suffix.empty()) {
        mult = unit_multiplier(suffix);
        if (mult == 0.0) fail(line, "unknown unit '" + suffix + "'");
      }
      if (!std::isfinite(v * mult)) fail(line, "non-finite value");
      out.push_back(v * mult);
      last_bare = suffix.empty();
    } else {
      double mult = unit_multiplier(tok);
      if (mult == 0.0) {
        fail(line, last_bare ? "unknown unit '" + tok + "'"
                             : "cannot parse '" + tok + "' as a number");
      }
      if (!last_bare) fail(line, "unit '" + tok + "' has no number before it");
      out.back() *= mult;
      last_bare = false;
    }
  }
  if (out.empty()) fail(line, "expected a number, got '" + value + "'");
  return out;
}

double parse_quantity(const std::string& value, int line) {
  std::vector<double> v = parse_quantities(value, line);
  if (v.size() != 1) fail(line, "expected a single number, got " + value);
  return v[0];
}

long long parse_int(const std::string& value, int line) {
  long long v = 0;
  auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(line, "expected an integer, got '" + value + "'");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& value, int line) {
  std::uint64_t v = 0;
  auto [ptr, ec] =
      std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || ptr != value.data() + value.size()) {
    fail(line, "expected a non-negative integer, got '" + value + "'");
  }
  return v;
}

bool parse_bool(const std::string& value, int line) {
  if (value == "true") return true;
  if (value == "false") return false;
  fail(line, "expected true or false, got '" + value + "'");
}

bool is_experiment_section(const std::string& s) {
  return s == "odmr" || s == "rabi" || s == "ramsey" || s == "cpmg" ||
         s == "t1" || s == "pumping" || s == "readout_histogram" ||
         s == "ple";
}

void set_system(ExperimentConfig& cfg, const std::string& key,
                const std::string& value, int line) {
  double v = parse_quantity(value, line);
  SivParams& p = cfg.system.params;
  if (key == "alpha") {
    cfg.system.field.alpha = v;
  } else if (key == "b_mag") {
    cfg.system.field.b_mag = v;
  } else if (key == "temperature") {
    cfg.system.temperature_k = v;
  } else if (key == "strain") {
    p.strain_x = v;
  } else if (key == "strain_y") {
    p.strain_y = v;
  } else if (key == "lambda_so") {
    p.lambda_so = v;
  } else if (key == "lambda_so_excited") {
    p.lambda_so_excited = v;
  } else if (key == "g_spin") {
    p.g_spin = v;
  } else if (key == "q_orbital") {
    p.q_orbital = v;
  } else if (key == "tau_optical") {
    p.tau_optical = v;
  } else if (key == "tau_ub") {
    p.tau_ub = v;
  } else if (key == "gamma0_phonon") {
    p.gamma0_phonon = v;
  } else if (key == "branch_ub") {
    p.branch_ub = v;
  } else if (key == "gamma_t1") {
    p.gamma_t1 = v;
  } else if (key == "delta_g") {
    p.delta_g = v;
  } else if (key == "flip_scale") {
    p.flip_scale = v;
  } else if (key == "flip_floor") {
    p.flip_floor = v;
  } else if (key == "offres_fraction") {
    p.offres_fraction = v;
  } else {
    fail(line, "unknown key '" + key + "' in [system]");
  }
}

void set_noise(ExperimentConfig& cfg, const std::string& key,
               const std::string& value, int line) {
  if (key != "ou" && key != "quasistatic") {
    fail(line, "unknown key '" + key + "' in [noise]");
  }
  std::vector<double> v = parse_quantities(value, line);
  NoiseModel model;
  std::string canon;
  if (key == "ou") {
    if (v.size() != 2) fail(line, "ou needs two numbers: sigma tau_c");
    model = OuModel{v[0], v[1]};
    canon = "ou = " + format_double(v[0]) + " " + format_double(v[1]);
  } else if (key == "quasistatic") {
    if (v.size() != 1) fail(line, "quasistatic needs one number: sigma");
    model = QuasiStaticModel{v[0]};
    canon = "quasistatic = " + format_double(v[0]);
  } else {
    fail(line, "unknown key '" + key + "' in [noise]");
  }
  try {
    validate_noise(model);
  } catch (const std::invalid_argument& e) {
    fail(line, e.what());
  }
  cfg.noise.push_back(model);
  cfg.noise_lines.push_back(canon);
}

/// Keys shared by the sequence experiments; true when `key` was one of them.
bool set_common_sequence(ExperimentSpec& e, const std::string& key,
                         const std::string& value, int line) {
  if (key == "init") {
    e.init_s = parse_quantity(value, line);
  } else if (key == "readout") {
    e.readout_s = parse_quantity(value, line);
  } else if (key == "saturation") {
    e.saturation = parse_quantity(value, line);
  } else if (key == "points") {
    e.points = static_cast<int>(parse_int(value, line));
  } else {
    return false;
  }
  return true;
}

bool set_time_grid(ExperimentSpec& e, const std::string& key,
                   const std::string& value, int line) {
  if (key == "t_min") {
    e.t_min_s = parse_quantity(value, line);
  } else if (key == "t_max") {
    e.t_max_s = parse_quantity(value, line);
  } else if (key == "spacing") {
    if (value == "log") {
      e.log_spacing = true;
    } else if (value == "linear") {
      e.log_spacing = false;
    } else {
      fail(line, "spacing must be log or linear, got '" + value + "'");
    }
  } else {
    return false;
  }
  return true;
}

void set_experiment(ExperimentConfig& cfg, const std::string& section,
                    const std::string& key, const std::string& value,
                    int line) {
  ExperimentSpec& e = cfg.experiment;
  if (section == "odmr") {
    if (key == "tau_mw") {
      e.tau_mw_s = parse_quantity(value, line);
    } else if (key == "f_center") {
      e.f_center_hz = parse_quantity(value, line);
    } else if (key == "span") {
      e.span_hz = parse_quantity(value, line);
    } else if (!set_common_sequence(e, key, value, line)) {
      fail(line, "unknown key '" + key + "' in [odmr]");
    }
  } else if (section == "rabi") {
    if (key == "rabi") {
      e.rabi_hz = parse_quantity(value, line);
    } else if (!set_time_grid(e, key, value, line) &&
               !set_common_sequence(e, key, value, line)) {
      fail(line, "unknown key '" + key + "' in [rabi]");
    }
  } else if (section == "ramsey") {
    if (key == "rabi") {
      e.rabi_hz = parse_quantity(value, line);
    } else if (key == "detuning") {
      e.detuning_hz = parse_quantity(value, line);
    } else if (!set_time_grid(e, key, value, line) &&
               !set_common_sequence(e, key, value, line)) {
      fail(line, "unknown key '" + key + "' in [ramsey]");
    }
  } else if (section == "cpmg") {
    if (key == "rabi") {
      e.rabi_hz = parse_quantity(value, line);
    } else if (key == "n_pulses") {
      e.n_pulses = static_cast<int>(parse_int(value, line));
    } else if (key == "fit_exponent") {
      if (value == "free") {
        e.fit_exponent = 0.0;
      } else {
        e.fit_exponent = parse_quantity(value, line);
        if (!(e.fit_exponent > 0.0)) {
          fail(line, "fit_exponent must be 'free' or > 0");
        }
      }
    } else if (!set_time_grid(e, key, value, line) &&
               !set_common_sequence(e, key, value, line)) {
      fail(line, "unknown key '" + key + "' in [cpmg]");
    }
  } else if (section == "t1") {
    if (!set_time_grid(e, key, value, line) &&
        !set_common_sequence(e, key, value, line)) {
      fail(line, "unknown key '" + key + "' in [t1]");
    }
  } else if (section == "pumping") {
    if (key == "case") {
      std::vector<double> v = parse_quantities(value, line);
      if (v.size() != 3 && v.size() != 4) {
        fail(line, "case needs: alpha b_mag window [strain]");
      }
      PumpingCase c;
      c.alpha_deg = v[0];
      c.b_mag = v[1];
      c.duration_s = v[2];
      if (v.size() == 4) c.strain_hz = v[3];
      e.cases.push_back(c);
    } else if (key == "saturation") {
      e.saturation = parse_quantity(value, line);
    } else {
      fail(line, "unknown key '" + key + "' in [pumping]");
    }
  } else if (section == "readout_histogram") {
    if (key == "window") {
      e.window_s = parse_quantity(value, line);
    } else if (key == "saturation") {
      e.saturation = parse_quantity(value, line);
    } else {
      fail(line, "unknown key '" + key + "' in [readout_histogram]");
    }
  } else if (section == "ple") {
    if (key == "linewidth") {
      e.linewidth_hz = parse_quantity(value, line);
    } else if (key == "temperatures") {
      e.temperatures_k = parse_quantities(value, line);
    } else if (key == "ratio_noise") {
      e.ratio_noise = parse_quantity(value, line);
    } else {
      fail(line, "unknown key '" + key + "' in [ple]");
    }
  }
}

void set_run(ExperimentConfig& cfg, const std::string& key,
             const std::string& value, int line) {
  RunOptions& r = cfg.run;
  if (key == "seed") {
    r.seed = parse_u64(value, line);
  } else if (key == "shots") {
    cfg.shots = static_cast<int>(parse_int(value, line));
  } else if (key == "workers") {
    r.workers = static_cast<int>(parse_int(value, line));
  } else if (key == "threshold") {
    r.threshold = static_cast<int>(parse_int(value, line));
  } else if (key == "eta_collect") {
    r.eta_collect = parse_quantity(value, line);
  } else if (key == "ideal_init") {
    r.ideal_init = parse_bool(value, line);
  } else if (key == "ideal_readout") {
    r.ideal_readout = parse_bool(value, line);
  } else if (key == "pulse_error_sigma") {
    r.pulse_error_sigma = parse_quantity(value, line);
  } else if (key == "dt") {
    r.trace_dt = parse_quantity(value, line);
  } else if (key == "out") {
    cfg.out_dir = value;
  } else if (key == "plot") {
    cfg.plot = parse_bool(value, line);
  } else {
    fail(line, "unknown key '" + key + "' in [run]");
  }
}

std::vector<double> time_grid(const ExperimentSpec& e) {
  if (e.points < 2) {
    throw std::invalid_argument("points must be >= 2");
  }
  std::vector<double> g(e.points);
  double n1 = static_cast<double>(e.points - 1);
  if (e.log_spacing) {
    if (!(e.t_min_s > 0.0)) {
      throw std::invalid_argument("log spacing requires t_min > 0");
    }
    double span = std::log(e.t_max_s / e.t_min_s);
    for (int i = 0; i < e.points; ++i) {
      g[i] = e.t_min_s * std::exp(span * i / n1);
    }
  } else {
    for (int i = 0; i < e.points; ++i) {
      g[i] = e.t_min_s + (e.t_max_s - e.t_min_s) * i / n1;
    }
  }
  return g;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::string section;
  std::istringstream is(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(is, raw)) {
    ++line_no;
    std::size_t hash = raw.find('#');
    if (hash != std::string::npos) raw.erase(hash);
    std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3) {
        fail(line_no, "malformed section header '" + line + "'");
      }
      std::string name = trim(line.substr(1, line.size() - 2));
      if (is_experiment_section(name)) {
        if (cfg.experiment.kind.empty()) {
          cfg.experiment.kind = name;
        } else if (cfg.experiment.kind != name) {
          fail(line_no, "second experiment section [" + name +
                            "]; already have [" + cfg.experiment.kind + "]");
        }
      } else if (name != "system" && name != "noise" && name != "run") {
        fail(line_no, "unknown section [" + name + "]");
      }
      section = name;
      continue;
    }
    std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(line_no, "expected 'key = value' or '[section]', got '" + line +
                        "'");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "missing key before '='");
    if (value.empty()) fail(line_no, "missing value for '" + key + "'");
    if (section.empty()) {
      fail(line_no, "'" + key + "' appears before any [section] header");
    }
    if (section == "system") {
      set_system(cfg, key, value, line_no);
    } else if (section == "noise") {
      set_noise(cfg, key, value, line_no);
    } else if (section == "run") {
      set_run(cfg, key, value, line_no);
    } else {
      set_experiment(cfg, section, key, value, line_no);
    }
  }
  if (cfg.experiment.kind.empty()) {
    throw std::invalid_argument(
        "config has no experiment section: expected one of [odmr] [rabi] "
        "[ramsey] [cpmg] [t1] [pumping] [readout_histogram] [ple]");
  }
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) {
    throw std::runtime_error("cannot open config file " + path);
  }
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_config(buf.str());
}

std::string canonical_config_text(const ExperimentConfig& cfg) {
  std::ostringstream os;
  auto kv = [&os](const char* key, const std::string& value) {
    os << key << " = " << value << "\n";
  };
  auto kvd = [&kv](const char* key, double v) { kv(key, format_double(v)); };
  auto kvb = [&kv](const char* key, bool v) { kv(key, v ? "true" : "false"); };

  const SivParams& p = cfg.system.params;
  os << "[system]\n";
  kvd("alpha", cfg.system.field.alpha);
  kvd("b_mag", cfg.system.field.b_mag);
  kvd("branch_ub", p.branch_ub);
  kvd("delta_g", p.delta_g);
  kvd("flip_floor", p.flip_floor);
  kvd("flip_scale", p.flip_scale);
  kvd("g_spin", p.g_spin);
  kvd("gamma0_phonon", p.gamma0_phonon);
  kvd("gamma_t1", p.gamma_t1);
  kvd("lambda_so", p.lambda_so);
  kvd("lambda_so_excited", p.lambda_so_excited);
  kvd("offres_fraction", p.offres_fraction);
  kvd("q_orbital", p.q_orbital);
  kvd("strain", p.strain_x);
  kvd("strain_y", p.strain_y);
  kvd("tau_optical", p.tau_optical);
  kvd("tau_ub", p.tau_ub);
  kvd("temperature", cfg.system.temperature_k);

  if (!cfg.noise_lines.empty()) {
    os << "\n[noise]\n";
    for (const std::string& line : cfg.noise_lines) os << line << "\n";
  }

  const ExperimentSpec& e = cfg.experiment;
  os << "\n[" << e.kind << "]\n";
  auto grid = [&] {
    kvd("t_max", e.t_max_s);
    kvd("t_min", e.t_min_s);
  };
  auto spacing = [&] { kv("spacing", e.log_spacing ? "log" : "linear"); };
  if (e.kind == "odmr") {
    kvd("f_center", e.f_center_hz);
    kvd("init", e.init_s);
    kvd("points", e.points);
    kvd("readout", e.readout_s);
    kvd("saturation", e.saturation);
    kvd("span", e.span_hz);
    kvd("tau_mw", e.tau_mw_s);
  } else if (e.kind == "rabi") {
    kvd("init", e.init_s);
    kvd("points", e.points);
    kvd("rabi", e.rabi_hz);
    kvd("readout", e.readout_s);
    kvd("saturation", e.saturation);
    grid();
  } else if (e.kind == "ramsey") {
    kvd("detuning", e.detuning_hz);
    kvd("init", e.init_s);
    kvd("points", e.points);
    kvd("rabi", e.rabi_hz);
    kvd("readout", e.readout_s);
    kvd("saturation", e.saturation);
    grid();
  } else if (e.kind == "cpmg") {
    kv("fit_exponent",
       e.fit_exponent > 0.0 ? format_double(e.fit_exponent) : "free");
    kvd("init", e.init_s);
    kvd("n_pulses", e.n_pulses);
    kvd("points", e.points);
    kvd("rabi", e.rabi_hz);
    kvd("readout", e.readout_s);
    kvd("saturation", e.saturation);
    spacing();
    grid();
  } else if (e.kind == "t1") {
    kvd("init", e.init_s);
    kvd("points", e.points);
    kvd("readout", e.readout_s);
    kvd("saturation", e.saturation);
    spacing();
    grid();
  } else if (e.kind == "pumping") {
    for (const PumpingCase& c : e.cases) {
      std::string v = format_double(c.alpha_deg) + " " +
                      format_double(c.b_mag) + " " +
                      format_double(c.duration_s);
      if (c.strain_hz >= 0.0) v += " " + format_double(c.strain_hz);
      kv("case", v);
    }
    kvd("saturation", e.saturation);
  } else if (e.kind == "readout_histogram") {
    kvd("saturation", e.saturation);
    kvd("window", e.window_s);
  } else if (e.kind == "ple") {
    kvd("linewidth", e.linewidth_hz);
    kvd("ratio_noise", e.ratio_noise);
    if (!e.temperatures_k.empty()) {
      std::string v;
      for (std::size_t i = 0; i < e.temperatures_k.size(); ++i) {
        if (i) v += " ";
        v += format_double(e.temperatures_k[i]);
      }
      kv("temperatures", v);
    }
  }

  os << "\n[run]\n";
  kvd("dt", cfg.run.trace_dt);
  kvd("eta_collect", cfg.run.eta_collect);
  kvb("ideal_init", cfg.run.ideal_init);
  kvb("ideal_readout", cfg.run.ideal_readout);
  if (!cfg.out_dir.empty()) kv("out", cfg.out_dir);
  kvb("plot", cfg.plot);
  kvd("pulse_error_sigma", cfg.run.pulse_error_sigma);
  kv("seed", std::to_string(cfg.run.seed));
  kvd("shots", cfg.shots);
  kvd("threshold", cfg.run.threshold);
  kvd("workers", cfg.run.workers);
  return os.str();
}

PulseSequence build_sequence(const ExperimentConfig& cfg) {
  const ExperimentSpec& e = cfg.experiment;
  PulseSequence seq;
  if (e.kind == "odmr") {
    double fc = e.f_center_hz;
    if (fc == 0.0) {
      fc = level_diagram(cfg.system.params, cfg.system.field).f_qubit;
    }
    seq = build_odmr(e.tau_mw_s, fc, e.span_hz, e.points, e.init_s,
                     e.readout_s, e.saturation);
  } else if (e.kind == "rabi") {
    seq = build_rabi(time_grid(e), e.rabi_hz, e.init_s, e.readout_s,
                     e.saturation);
  } else if (e.kind == "ramsey") {
    seq = build_ramsey(time_grid(e), e.detuning_hz, e.rabi_hz, e.init_s,
                       e.readout_s, e.saturation);
  } else if (e.kind == "cpmg") {
    seq = build_cpmg(e.n_pulses, time_grid(e), e.rabi_hz, e.init_s,
                     e.readout_s, e.saturation);
  } else if (e.kind == "t1") {
    seq = build_t1(time_grid(e), e.init_s, e.readout_s, e.saturation);
  } else if (e.kind == "pumping") {
    seq = build_pumping(e.cases, e.saturation);
  } else {
    throw std::invalid_argument("experiment '" + e.kind +
                                "' has no pulse sequence");
  }
  seq.shots_per_point = cfg.shots;
  seq.validate();
  return seq;
}

}  // namespace sivsim
