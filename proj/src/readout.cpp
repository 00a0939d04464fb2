#include "sivsim/readout.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace sivsim {

void CountHistogram::validate() const {
  if (bin_values.size() != freq_down.size() ||
      bin_values.size() != freq_up.size()) {
    throw std::invalid_argument("histogram arrays must have equal length");
  }
  if (!(window_s > 0.0)) {
    throw std::invalid_argument("histogram window must be > 0");
  }
  const auto total = [](const std::vector<int>& v) {
    return std::accumulate(v.begin(), v.end(), 0);
  };
  if (total(freq_down) != n_shots || total(freq_up) != n_shots) {
    throw std::invalid_argument("histogram frequencies must sum to n_shots");
  }
}

int simulate_readout_window(int init_level, const RateSet& rates,
                            const SivParams& params, double window_s,
                            double eta_collect, double r_offres_hz,
                            RngStream& rng) {
  if (!(window_s > 0.0)) {
    throw std::invalid_argument("readout window must be > 0");
  }
  const LevelGraph graph =
      build_level_graph(rates, params, /*drive_down=*/true, r_offres_hz);
  int count = 0;
  run_jump_process(init_level, graph, window_s, eta_collect, rng,
                   [&count](const JumpEvent& e) {
                     if (e.photon) ++count;
                   });
  return count;
}

CountHistogram build_histograms(const std::vector<int>& counts_down,
                                const std::vector<int>& counts_up,
                                double window_s) {
  if (counts_down.empty() || counts_up.empty()) {
    throw std::invalid_argument("histograms need at least one shot per state");
  }
  if (counts_down.size() != counts_up.size()) {
    throw std::invalid_argument(
        "histograms need equal shot counts for the two states");
  }
  if (!(window_s > 0.0)) {
    throw std::invalid_argument("histogram window must be > 0");
  }
  int max_count = 0;
  for (int c : counts_down) max_count = std::max(max_count, c);
  for (int c : counts_up) max_count = std::max(max_count, c);
  for (int c : counts_down) {
    if (c < 0) throw std::invalid_argument("photon counts must be >= 0");
  }
  for (int c : counts_up) {
    if (c < 0) throw std::invalid_argument("photon counts must be >= 0");
  }
  CountHistogram hist;
  hist.window_s = window_s;
  hist.n_shots = static_cast<int>(counts_down.size());
  hist.bin_values.resize(static_cast<std::size_t>(max_count) + 1);
  std::iota(hist.bin_values.begin(), hist.bin_values.end(), 0);
  hist.freq_down.assign(hist.bin_values.size(), 0);
  hist.freq_up.assign(hist.bin_values.size(), 0);
  for (int c : counts_down) ++hist.freq_down[static_cast<std::size_t>(c)];
  for (int c : counts_up) ++hist.freq_up[static_cast<std::size_t>(c)];
  hist.validate();
  return hist;
}

double histogram_mean(const CountHistogram& hist, bool down) {
  hist.validate();
  const auto& freq = down ? hist.freq_down : hist.freq_up;
  double sum = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    sum += static_cast<double>(hist.bin_values[i]) * freq[i];
  }
  return sum / hist.n_shots;
}

ThresholdFidelity threshold_fidelity(const CountHistogram& hist,
                                     int threshold) {
  if (threshold < 0) {
    throw std::invalid_argument("threshold must be >= 0");
  }
  hist.validate();
  int down_above = 0;
  int up_at_or_below = 0;
  for (std::size_t i = 0; i < hist.bin_values.size(); ++i) {
    if (hist.bin_values[i] > threshold) {
      down_above += hist.freq_down[i];
    } else {
      up_at_or_below += hist.freq_up[i];
    }
  }
  ThresholdFidelity f;
  f.f_down = static_cast<double>(down_above) / hist.n_shots;
  f.f_up = static_cast<double>(up_at_or_below) / hist.n_shots;
  f.f_avg = 0.5 * (f.f_down + f.f_up);
  return f;
}

std::pair<int, double> optimal_threshold(const CountHistogram& hist) {
  hist.validate();
  int best_threshold = 0;
  double best_avg = -1.0;
  const int max_count = hist.bin_values.back();
  for (int t = 0; t <= max_count; ++t) {
    const double avg = threshold_fidelity(hist, t).f_avg;
    if (avg > best_avg) {
      best_avg = avg;
      best_threshold = t;
    }
  }
  return {best_threshold, best_avg};
}

double ub_duty_loss(const RateSet& rates, const SivParams& params) {
  if (!(rates.r_scatter > 0.0)) return 0.0;
  const double shelved = params.branch_ub * params.tau_ub;
  const double cycle = 1.0 / rates.r_scatter + params.tau_optical + shelved;
  return shelved / cycle;
}

void write_histogram_csv(const CountHistogram& hist, const std::string& path) {
  hist.validate();
  std::ofstream os(path);
  if (!os) {
    throw std::runtime_error("cannot open " + path + " for writing");
  }
  os << "count,freq_down,freq_up\r\n";
  for (std::size_t i = 0; i < hist.bin_values.size(); ++i) {
    os << hist.bin_values[i] << ',' << hist.freq_down[i] << ','
       << hist.freq_up[i] << "\r\n";
  }
  if (!os) {
    throw std::runtime_error("write to " + path + " failed");
  }
}

}  // namespace sivsim
