#include "sivsim/lindblad.hpp"

#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "sivsim/constants.hpp"
#include "sivsim/kernels.hpp"

namespace sivsim {

using cd = std::complex<double>;

// ----------------------------------------------------------------------------
// DensityMatrix
// ----------------------------------------------------------------------------

DensityMatrix DensityMatrix::pure(int dim, int level) {
  if (dim < 2 || dim > 6)
    throw std::invalid_argument("DensityMatrix: dim must be in [2, 6]");
  if (level < 0 || level >= dim)
    throw std::invalid_argument("DensityMatrix: level out of range");
  DensityMatrix out;
  out.dim = dim;
  out.rho = Eigen::MatrixXcd::Zero(dim, dim);
  out.rho(level, level) = 1.0;
  return out;
}

void DensityMatrix::check() const {
  if (dim < 2 || dim > 6 || rho.rows() != dim || rho.cols() != dim)
    throw std::runtime_error("DensityMatrix: inconsistent dimensions");
  if ((rho - rho.adjoint()).cwiseAbs().maxCoeff() > 1e-10)
    throw std::runtime_error("DensityMatrix: not Hermitian within 1e-10");
  if (std::abs(rho.trace().real() - 1.0) > 1e-9 ||
      std::abs(rho.trace().imag()) > 1e-9)
    throw std::runtime_error("DensityMatrix: trace deviates from 1 beyond 1e-9");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(0.5 * (rho + rho.adjoint()));
  if (es.eigenvalues().minCoeff() < -1e-9)
    throw std::runtime_error("DensityMatrix: negative eigenvalue beyond -1e-9");
}

// ----------------------------------------------------------------------------
// evolve: vectorized Lindblad generator + fixed-step RK4
// ----------------------------------------------------------------------------

namespace {

/// Column-stacking vec convention: vec(A X B) = (B^T kron A) vec(X).
Eigen::MatrixXcd liouvillian(const Eigen::MatrixXcd& h_hz,
                             const std::vector<JumpOperator>& jumps) {
  const int d = static_cast<int>(h_hz.rows());
  const int n = d * d;
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(d, d);
  auto kron = [d](const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(d * d, d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) out.block(i * d, j * d, d, d) = a(i, j) * b;
    return out;
  };

  Eigen::MatrixXcd l = Eigen::MatrixXcd::Zero(n, n);
  const cd mi(0.0, -1.0);
  l += mi * constants::two_pi *
       (kron(id, h_hz) - kron(h_hz.transpose(), id));
  for (const auto& j : jumps) {
    const Eigen::MatrixXcd& a = j.matrix;
    const Eigen::MatrixXcd ada = a.adjoint() * a;
    l += j.rate * (kron(a.conjugate(), a) - 0.5 * kron(id, ada) -
                   0.5 * kron(ada.transpose(), id));
  }
  return l;
}

}  // namespace

DensityMatrix evolve(const DensityMatrix& rho, const Eigen::MatrixXcd& h_hz,
                     const std::vector<JumpOperator>& jumps, double duration_s,
                     double dt_s) {
  rho.check();
  const int d = rho.dim;
  if (h_hz.rows() != d || h_hz.cols() != d)
    throw std::invalid_argument("evolve: Hamiltonian dimension mismatch");
  if (!(duration_s >= 0.0)) throw std::invalid_argument("evolve: duration < 0");
  if (duration_s == 0.0) return rho;
  if (!(dt_s > 0.0 && dt_s <= duration_s))
    throw std::invalid_argument("evolve: require 0 < dt <= duration");

  // Step-size precondition: dt * fastest angular scale <= 0.05, with the
  // diagnostic naming which scale is the offender.
  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(h_hz);
    const double h_scale =
        constants::two_pi * es.eigenvalues().cwiseAbs().maxCoeff();
    if (dt_s * h_scale > 0.05) {
      std::ostringstream msg;
      msg << "evolve: dt too large for Hamiltonian norm (dt*2pi*||H|| = "
          << dt_s * h_scale << " > 0.05)";
      throw std::invalid_argument(msg.str());
    }
    for (std::size_t k = 0; k < jumps.size(); ++k) {
      if (!(jumps[k].rate >= 0.0))
        throw std::invalid_argument("evolve: jump rate must be >= 0");
      if (jumps[k].matrix.rows() != d || jumps[k].matrix.cols() != d)
        throw std::invalid_argument("evolve: jump operator dimension mismatch");
      const double r = jumps[k].rate * jumps[k].matrix.squaredNorm();
      if (dt_s * r > 0.05) {
        std::ostringstream msg;
        msg << "evolve: dt too large for jump operator " << k
            << " (dt*rate*||A||^2 = " << dt_s * r << " > 0.05)";
        throw std::invalid_argument(msg.str());
      }
    }
  }

  const Eigen::MatrixXcd l = liouvillian(h_hz, jumps);
  const std::size_t n = static_cast<std::size_t>(d) * d;

  // Planar column-major copies for the dispatch kernels.  Each state buffer
  // is [re | im], contiguous, so axpy/xpay run over 2n doubles at once.
  std::vector<double> lre(n * n), lim(n * n);
  for (std::size_t j = 0; j < n; ++j)
    for (std::size_t i = 0; i < n; ++i) {
      lre[j * n + i] = l(i, j).real();
      lim[j * n + i] = l(i, j).imag();
    }
  std::vector<double> v(2 * n), k1(2 * n), k2(2 * n), k3(2 * n), k4(2 * n),
      tmp(2 * n);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) {
      v[static_cast<std::size_t>(j) * d + i] = rho.rho(i, j).real();
      v[n + static_cast<std::size_t>(j) * d + i] = rho.rho(i, j).imag();
    }

  const auto steps = static_cast<std::size_t>(
      std::ceil(duration_s / dt_s - 1e-12));
  const double dt = duration_s / static_cast<double>(steps);
  const auto& kt = kernels::active();
  auto apply_l = [&](const std::vector<double>& x, std::vector<double>& y) {
    kt.zgemv(n, lre.data(), lim.data(), x.data(), x.data() + n, y.data(),
             y.data() + n);
  };
  for (std::size_t s = 0; s < steps; ++s) {
    apply_l(v, k1);
    kt.xpay(2 * n, v.data(), 0.5 * dt, k1.data(), tmp.data());
    apply_l(tmp, k2);
    kt.xpay(2 * n, v.data(), 0.5 * dt, k2.data(), tmp.data());
    apply_l(tmp, k3);
    kt.xpay(2 * n, v.data(), dt, k3.data(), tmp.data());
    apply_l(tmp, k4);
    kt.axpy(2 * n, dt / 6.0, k1.data(), v.data());
    kt.axpy(2 * n, dt / 3.0, k2.data(), v.data());
    kt.axpy(2 * n, dt / 3.0, k3.data(), v.data());
    kt.axpy(2 * n, dt / 6.0, k4.data(), v.data());
  }

  DensityMatrix out;
  out.dim = d;
  out.rho = Eigen::MatrixXcd(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i)
      out.rho(i, j) = cd(v[static_cast<std::size_t>(j) * d + i],
                         v[n + static_cast<std::size_t>(j) * d + i]);
  out.check();
  return out;
}

// ----------------------------------------------------------------------------
// MW pulses and waits
// ----------------------------------------------------------------------------

namespace {

/// Exact rotating-frame unitary for one piecewise-constant segment.
Eigen::Matrix2cd segment_unitary(double rabi_hz, double detuning_hz,
                                 double phase_rad, double dt_s) {
  const double ox = rabi_hz * std::cos(phase_rad);
  const double oy = rabi_hz * std::sin(phase_rad);
  const double oz = detuning_hz;
  const double om = std::sqrt(ox * ox + oy * oy + oz * oz);
  const double half = constants::pi * om * dt_s;  // omega_eff * t / 2
  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  if (om == 0.0) return u;
  const double c = std::cos(half), s = std::sin(half);
  const double nx = ox / om, ny = oy / om, nz = oz / om;
  // basis index 0 = |down>, 1 = |up>; sigma_z = |up><up| - |down><down|
  const cd i1(0.0, 1.0);
  u(0, 0) = c + i1 * s * nz;
  u(1, 1) = c - i1 * s * nz;
  u(1, 0) = -i1 * s * (nx + i1 * ny);
  u(0, 1) = -i1 * s * (nx - i1 * ny);
  return u;
}

}  // namespace

DensityMatrix apply_mw_pulse(const DensityMatrix& rho, double rabi_hz,
                             double detuning_hz, double phase_rad,
                             double duration_s, const DephasingTrace* trace) {
  rho.check();
  if (rho.dim != 2)
    throw std::invalid_argument("apply_mw_pulse: qubit (dim 2) only");
  if (!(rabi_hz >= 0.0))
    throw std::invalid_argument("apply_mw_pulse: rabi must be >= 0");
  if (!(duration_s >= 0.0))
    throw std::invalid_argument("apply_mw_pulse: duration must be >= 0");

  Eigen::Matrix2cd u = Eigen::Matrix2cd::Identity();
  if (trace == nullptr) {
    u = segment_unitary(rabi_hz, detuning_hz, phase_rad, duration_s);
  } else {
    if (!(trace->sample_dt > 0.0))
      throw std::invalid_argument("apply_mw_pulse: trace sample_dt must be > 0");
    const double covered =
        trace->sample_dt * static_cast<double>(trace->offsets_hz.size());
    if (covered + 1e-15 < duration_s)
      throw std::invalid_argument(
          "apply_mw_pulse: dephasing trace shorter than pulse duration");
    double t = 0.0;
    std::size_t k = 0;
    while (t < duration_s - 1e-15) {
      const double seg = std::min(trace->sample_dt, duration_s - t);
      u = segment_unitary(rabi_hz, detuning_hz + trace->offsets_hz[k],
                          phase_rad, seg) *
          u;
      t += seg;
      ++k;
    }
  }
  DensityMatrix out;
  out.dim = 2;
  out.rho = u * rho.rho * u.adjoint();
  out.check();
  return out;
}

DensityMatrix qubit_wait(const DensityMatrix& rho, double detuning_hz,
                         double gamma_phi_hz, double gamma_1_hz,
                         double duration_s) {
  rho.check();
  if (rho.dim != 2)
    throw std::invalid_argument("qubit_wait: qubit (dim 2) only");
  if (!(gamma_phi_hz >= 0.0 && gamma_1_hz >= 0.0 && duration_s >= 0.0))
    throw std::invalid_argument("qubit_wait: rates and duration must be >= 0");

  // Phase sign matches apply_mw_pulse's sigma_z = |up><up| - |down><down|:
  // rho_01 = <down|rho|up> rotates as exp(+i 2 pi detuning t).
  const double relax = std::exp(-gamma_1_hz * duration_s);
  const cd decay =
      std::exp(cd(-gamma_phi_hz - 0.5 * gamma_1_hz,
                  constants::two_pi * detuning_hz) *
               duration_s);
  DensityMatrix out;
  out.dim = 2;
  out.rho = Eigen::Matrix2cd::Zero();
  out.rho(0, 0) = 0.5 + (rho.rho(0, 0).real() - 0.5) * relax;
  out.rho(1, 1) = 1.0 - out.rho(0, 0);
  out.rho(0, 1) = rho.rho(0, 1) * decay;
  out.rho(1, 0) = std::conj(out.rho(0, 1));
  out.check();
  return out;
}

double expectation(const DensityMatrix& rho,
                   const Eigen::MatrixXcd& observable) {
  if (observable.rows() != rho.dim || observable.cols() != rho.dim)
    throw std::invalid_argument("expectation: dimension mismatch");
  const Eigen::MatrixXcd sym = 0.5 * (observable + observable.adjoint());
  return (rho.rho * sym).trace().real();
}

}  // namespace sivsim
