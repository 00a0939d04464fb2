#include "sivsim/siv_model.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "sivsim/constants.hpp"

namespace sivsim {

using cd = std::complex<double>;

// ----------------------------------------------------------------------------
// Validation
// ----------------------------------------------------------------------------

void SivParams::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0))
      throw std::invalid_argument(std::string("SivParams.") + name +
                                  " must be strictly positive");
  };
  positive(lambda_so, "lambda_so");
  positive(lambda_so_excited, "lambda_so_excited");
  positive(g_spin, "g_spin");
  positive(tau_optical, "tau_optical");
  positive(tau_ub, "tau_ub");
  positive(gamma0_phonon, "gamma0_phonon");
  positive(gamma_t1, "gamma_t1");
  if (!(branch_ub >= 0.0 && branch_ub < 1.0))
    throw std::invalid_argument("SivParams.branch_ub must be in [0, 1)");
  if (!(q_orbital >= 0.0 && q_orbital <= 1.0))
    throw std::invalid_argument("SivParams.q_orbital must be in [0, 1]");
  if (!(delta_g >= 0.0))
    throw std::invalid_argument("SivParams.delta_g must be non-negative");
  if (!(flip_scale >= 0.0))
    throw std::invalid_argument("SivParams.flip_scale must be non-negative");
  if (!(flip_floor >= 0.0 && flip_floor <= 0.5))
    throw std::invalid_argument("SivParams.flip_floor must be in [0, 0.5]");
  if (!(offres_fraction >= 0.0 && offres_fraction <= 1.0))
    throw std::invalid_argument("SivParams.offres_fraction must be in [0, 1]");
}

void FieldConfig::validate() const {
  if (!(b_mag >= 0.0))
    throw std::invalid_argument("FieldConfig.b_mag must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 90.0))
    throw std::invalid_argument("FieldConfig.alpha must be in [0, 90] degrees");
}

// ----------------------------------------------------------------------------
// Hamiltonians
// ----------------------------------------------------------------------------

namespace {

/// Shared matrix builder; `lambda` selects the manifold (ground or excited).
/// Basis {e+|up>, e+|down>, e-|up>, e-|down>}; all entries in Hz.
Eigen::Matrix4cd manifold_hamiltonian(double lambda, const SivParams& params,
                                      const FieldConfig& field) {
  const double rad = field.alpha * constants::pi / 180.0;
  const double bz = field.b_mag * std::cos(rad);
  const double bx = field.b_mag * std::sin(rad);
  const double zeeman = constants::mu_b_over_h;  // Hz per Gauss per g

  Eigen::Matrix4cd h = Eigen::Matrix4cd::Zero();

  // lambda Lz Sz with Lz = diag(+1,+1,-1,-1), Sz = diag(+1,-1,+1,-1)/2.
  h(0, 0) += lambda / 2.0;
  h(1, 1) -= lambda / 2.0;
  h(2, 2) -= lambda / 2.0;
  h(3, 3) += lambda / 2.0;

  // Transverse strain: orbital sigma_x / sigma_y, identity in spin.
  const cd exy(params.strain_x, -params.strain_y);
  h(0, 2) += exy;
  h(1, 3) += exy;
  h(2, 0) += std::conj(exy);
  h(3, 1) += std::conj(exy);

  // Orbital Zeeman along the symmetry axis, quenched by q_orbital.  The
  // Kramers-symmetric 2 Lz Sz form shifts each branch doublet rigidly: the
  // branch splitting picks up the field dependence (lambda_eff = lambda +
  // 2 q mu_B B_z) while the qubit splitting stays spin-only, matching the
  // ODMR g-factor calibration.
  const double orb = params.q_orbital * zeeman * bz;
  h(0, 0) += orb;
  h(1, 1) -= orb;
  h(2, 2) -= orb;
  h(3, 3) += orb;

  // Spin Zeeman g (mu_B/h) (B_z Sz + B_x Sx).
  const double gz = params.g_spin * zeeman * bz / 2.0;
  const double gx = params.g_spin * zeeman * bx / 2.0;
  h(0, 0) += gz;
  h(1, 1) -= gz;
  h(2, 2) += gz;
  h(3, 3) -= gz;
  h(0, 1) += gx;
  h(1, 0) += gx;
  h(2, 3) += gx;
  h(3, 2) += gx;

  return h;
}

/// Deterministic eigenvector phase: largest-|component| entry made real
/// positive; ties resolved toward the lowest index.
void fix_phase(Eigen::Matrix4cd& vecs) {
  for (int c = 0; c < 4; ++c) {
    int best = 0;
    double best_mag = -1.0;
    for (int r = 0; r < 4; ++r) {
      double m = std::abs(vecs(r, c));
      if (m > best_mag + 1e-15) {
        best_mag = m;
        best = r;
      }
    }
    cd pivot = vecs(best, c);
    if (std::abs(pivot) > 0.0) {
      cd phase = pivot / std::abs(pivot);
      vecs.col(c) /= phase;
    }
  }
}

struct Eigensystem {
  std::array<double, 4> vals;
  Eigen::Matrix4cd vecs;
};

Eigensystem diagonalize(const Eigen::Matrix4cd& h) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> solver(h);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eigen-decomposition failed");
  Eigensystem out;
  for (int i = 0; i < 4; ++i) out.vals[i] = solver.eigenvalues()(i);
  out.vecs = solver.eigenvectors();  // columns, eigenvalues ascending
  fix_phase(out.vecs);
  return out;
}

/// Cross-transition spin overlap |<LB up | LB' down'>|.
///
/// Within the lower ground branch the transverse spin response is orbitally
/// quenched: the two branch states occupy (near-)orthogonal orbital states,
/// so B_x couples them only through the strain-induced orbital mixing,
/// which contributes a transverse g-factor ratio g_perp/g_par = 2s/Delta(0)
/// with s the transverse strain and Delta(0) the zero-field splitting.  The
/// excited manifold, with its ~5x larger spin-orbit splitting, keeps its
/// spin axis pinned to the symmetry axis over the fields of interest, so
/// the overlap reduces to the tilt of the ground qubit axis:
///
///   tan(theta) = (g_perp/g_par) tan(alpha),   overlap = |sin(theta/2)|
///
/// Unstrained emitters have no mixing pathway and stay perfectly cyclic at
/// every angle (up to the flip floor).
double cross_spin_overlap(const SivParams& params, const FieldConfig& field) {
  const double s = std::hypot(params.strain_x, params.strain_y);
  const double chi = 2.0 * s / std::hypot(params.lambda_so, 2.0 * s);
  const double rad = field.alpha * constants::pi / 180.0;
  const double theta = std::atan2(chi * std::sin(rad), std::cos(rad));
  return std::abs(std::sin(0.5 * theta));
}

}  // namespace

Eigen::Matrix4cd ground_hamiltonian(const SivParams& params,
                                    const FieldConfig& field) {
  params.validate();
  field.validate();
  return manifold_hamiltonian(params.lambda_so, params, field);
}

Eigen::Matrix4cd excited_hamiltonian(const SivParams& params,
                                     const FieldConfig& field) {
  params.validate();
  field.validate();
  return manifold_hamiltonian(params.lambda_so_excited, params, field);
}

// ----------------------------------------------------------------------------
// Level diagram
// ----------------------------------------------------------------------------

LevelDiagram level_diagram(const SivParams& params, const FieldConfig& field) {
  const Eigensystem g = diagonalize(ground_hamiltonian(params, field));
  const Eigensystem e = diagonalize(excited_hamiltonian(params, field));

  LevelDiagram d;
  d.ground_levels = g.vals;
  d.ground_vecs = g.vecs;
  d.delta_gs = 0.5 * (g.vals[2] + g.vals[3]) - 0.5 * (g.vals[0] + g.vals[1]);
  d.f_qubit = g.vals[1] - g.vals[0];

  // Optical lines relative to the zero-field C line (same strain, B = 0).
  FieldConfig zero{0.0, 0.0};
  const Eigensystem g0 = diagonalize(manifold_hamiltonian(params.lambda_so, params, zero));
  const Eigensystem e0 =
      diagonalize(manifold_hamiltonian(params.lambda_so_excited, params, zero));
  const double c_line = 0.5 * (e0.vals[0] + e0.vals[1]) -
                        0.5 * (g0.vals[0] + g0.vals[1]);
  d.f_down = (e.vals[0] - g.vals[0]) - c_line;
  d.f_up = (e.vals[1] - g.vals[1]) - c_line;

  d.spin_overlap = cross_spin_overlap(params, field);
  return d;
}

// ----------------------------------------------------------------------------
// Phonon rates and PLE
// ----------------------------------------------------------------------------

PhononRates phonon_rates(const SivParams& params, double delta_gs_hz,
                         double temperature_k) {
  params.validate();
  if (!(temperature_k > 0.0))
    throw std::invalid_argument("phonon_rates: temperature must be > 0");
  if (!(delta_gs_hz > 0.0))
    throw std::invalid_argument("phonon_rates: delta_gs must be > 0");

  const double x = constants::h_over_kb * delta_gs_hz / temperature_k;
  const double nbar = 1.0 / std::expm1(x);
  PhononRates out;
  out.gamma_minus = params.gamma0_phonon * (nbar + 1.0);
  out.gamma_plus = params.gamma0_phonon * nbar;
  out.polarization = 1.0 / (1.0 + std::exp(-x));
  return out;
}

double ple_ratio(double delta_gs_hz, double temperature_k) {
  if (!(temperature_k > 0.0))
    throw std::invalid_argument("ple_ratio: temperature must be > 0");
  return std::exp(-constants::h_over_kb * delta_gs_hz / temperature_k);
}

std::vector<std::pair<double, double>> ple_spectrum(const SivParams& params,
                                                    const FieldConfig& field,
                                                    double temperature_k,
                                                    double linewidth_hz) {
  if (!(linewidth_hz > 0.0))
    throw std::invalid_argument("ple_spectrum: linewidth must be > 0");
  const LevelDiagram d = level_diagram(params, field);
  const double ratio = ple_ratio(d.delta_gs, temperature_k);

  const double lo = -d.delta_gs - 8.0 * linewidth_hz;
  const double hi = 8.0 * linewidth_hz;
  const int n = 1601;
  const double hw2 = 0.25 * linewidth_hz * linewidth_hz;  // (FWHM/2)^2

  std::vector<std::pair<double, double>> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    const double delta = lo + (hi - lo) * i / (n - 1);
    const double c_peak = hw2 / (delta * delta + hw2);
    const double dd = delta + d.delta_gs;  // D line sits delta_gs below C
    const double d_peak = ratio * hw2 / (dd * dd + hw2);
    out.emplace_back(delta, c_peak + d_peak);
  }
  return out;
}

// ----------------------------------------------------------------------------
// Cyclicity and rate assembly
// ----------------------------------------------------------------------------

double flip_probability(const SivParams& params, const FieldConfig& field) {
  const LevelDiagram d = level_diagram(params, field);
  const double ov2 = d.spin_overlap * d.spin_overlap;
  return std::clamp(params.flip_scale * ov2 + params.flip_floor, 0.0, 0.5);
}

double cyclicity(const SivParams& params, const FieldConfig& field) {
  return 1.0 - flip_probability(params, field);
}

RateSet rate_set(const SivParams& params, const FieldConfig& field,
                 double temperature_k, double saturation) {
  if (!(saturation >= 0.0))
    throw std::invalid_argument("rate_set: saturation must be non-negative");
  const LevelDiagram d = level_diagram(params, field);
  const PhononRates ph = phonon_rates(params, d.delta_gs, temperature_k);
  const double eta = cyclicity(params, field);
  const double radiative = (1.0 - params.branch_ub) / params.tau_optical;
  const double r_max = 1.0 / (2.0 * params.tau_optical);

  RateSet rs;
  rs.gamma_plus = ph.gamma_plus;
  rs.gamma_minus = ph.gamma_minus;
  rs.gamma_par = radiative * eta;
  rs.gamma_perp = radiative * (1.0 - eta);
  rs.r_scatter = r_max * saturation / (1.0 + saturation);
  rs.gamma_t1 = params.gamma_t1;
  return rs;
}

}  // namespace sivsim
