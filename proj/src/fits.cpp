#include "sivsim/fits.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <numeric>
#include <stdexcept>

#include "sivsim/constants.hpp"

namespace sivsim {

namespace {

constexpr double kWeightFloor = 1e-12;

/// Weighted residual + Jacobian callback: fills r (n) and jac (n x k) with
/// r_i = w_i (y_i - f(x_i)) and jac = dr/dtheta.
using EvalFn =
    std::function<void(const Eigen::VectorXd&, Eigen::VectorXd&, Eigen::MatrixXd&)>;

/// Covariance convention: with caller-supplied errors the weights are
/// absolute and C = (J^T J)^-1 directly; without them the residual scatter
/// has to set the scale, C *= chi^2/dof.
enum class SigmaMode { kAbsolute, kScaled };

std::vector<double> make_weights(const std::vector<double>& yerr,
                                 std::size_t n) {
  std::vector<double> w(n, 1.0);
  if (yerr.empty()) return w;
  if (yerr.size() != n)
    throw std::invalid_argument("fit: yerr length does not match data");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(yerr[i] >= 0.0))
      throw std::invalid_argument("fit: negative measurement error");
    w[i] = 1.0 / std::max(yerr[i], kWeightFloor);
  }
  return w;
}

void require_increasing(const std::vector<double>& x, const char* who) {
  for (std::size_t i = 1; i < x.size(); ++i)
    if (!(x[i] > x[i - 1]))
      throw std::invalid_argument(std::string(who) +
                                  ": x must be strictly increasing");
}

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt scaling).  The
/// scaling makes the iteration invariant under per-parameter rescaling,
/// which in turn keeps the fits exactly equivariant under x/y unit changes.
FitResult run_lm(const std::vector<std::string>& names, Eigen::VectorXd theta,
                 const EvalFn& eval, int n_resid, SigmaMode sigma_mode) {
  const int k = static_cast<int>(theta.size());
  FitResult out;
  out.names = names;
  out.values.assign(static_cast<std::size_t>(k), 0.0);
  out.sigmas.assign(static_cast<std::size_t>(k), 0.0);

  Eigen::VectorXd r(n_resid), r_try(n_resid);
  Eigen::MatrixXd jac(n_resid, k), jac_try(n_resid, k);
  eval(theta, r, jac);
  double cost = r.squaredNorm();

  auto fail = [&](const std::string& why) {
    out.message = why;
    out.converged = false;
    for (int j = 0; j < k; ++j) out.values[static_cast<std::size_t>(j)] = theta[j];
    out.residual_rms = std::sqrt(cost / n_resid);
    return out;
  };

  auto rank_deficient = [&](const Eigen::MatrixXd& jj) -> int {
    const Eigen::VectorXd d = jj.diagonal();
    const double dmax = d.maxCoeff();
    if (!(dmax > 0.0)) return 0;
    for (int j = 0; j < k; ++j)
      if (d[j] <= 1e-24 * dmax) return j;
    return -1;
  };

  double lambda = 1e-3;
  bool converged = false;
  int iter = 0;
  for (; iter < 300; ++iter) {
    const Eigen::MatrixXd jj = jac.transpose() * jac;
    const Eigen::VectorXd g = jac.transpose() * r;
    const int bad = rank_deficient(jj);
    if (bad >= 0)
      return fail("rank-deficient Jacobian: parameter '" +
                  names[static_cast<std::size_t>(bad)] +
                  "' is unconstrained by the data");

    bool accepted = false;
    for (int inner = 0; inner < 50; ++inner) {
      Eigen::MatrixXd damped = jj;
      damped.diagonal() += lambda * jj.diagonal();
      const Eigen::VectorXd step = damped.ldlt().solve(-g);
      if (!step.allFinite()) {
        lambda *= 4.0;
        continue;
      }
      const Eigen::VectorXd theta_try = theta + step;
      eval(theta_try, r_try, jac_try);
      const double cost_try = r_try.squaredNorm();
      if (std::isfinite(cost_try) && cost_try <= cost) {
        double max_rel = 0.0;
        for (int j = 0; j < k; ++j)
          max_rel = std::max(max_rel,
                             std::abs(step[j]) / (std::abs(theta[j]) + 1.0));
        const double drop = cost - cost_try;
        theta = theta_try;
        r.swap(r_try);
        jac.swap(jac_try);
        cost = cost_try;
        lambda = std::max(lambda / 3.0, 1e-14);
        accepted = true;
        if (drop <= 1e-14 * cost + 1e-300 || max_rel < 1e-13) converged = true;
        break;
      }
      lambda *= 4.0;
      if (lambda > 1e15) break;
    }
    if (!accepted) {
      // No downhill step found at any damping: either we are at the
      // minimum (tiny gradient) or genuinely stuck.
      const double gnorm = g.cwiseAbs().maxCoeff();
      if (gnorm * gnorm <= 1e-16 * (cost + 1e-300) * jj.diagonal().maxCoeff()) {
        converged = true;
        break;
      }
      return fail("stalled: no descent direction at maximum damping");
    }
    if (converged) break;
  }
  out.n_iter = iter + 1;
  if (!converged) return fail("did not converge within the iteration budget");

  const int dof = n_resid - k;
  for (int j = 0; j < k; ++j) out.values[static_cast<std::size_t>(j)] = theta[j];
  out.residual_rms = std::sqrt(cost / n_resid);
  if (!theta.allFinite()) return fail("non-finite parameters");
  if (dof <= 0)
    return fail("underdetermined: no residual degrees of freedom");

  const Eigen::MatrixXd jj = jac.transpose() * jac;
  if (rank_deficient(jj) >= 0)
    return fail("rank-deficient Jacobian at the solution");
  const Eigen::MatrixXd cov = jj.ldlt().solve(
      Eigen::MatrixXd::Identity(k, k));
  const double s2 = sigma_mode == SigmaMode::kScaled ? cost / dof : 1.0;
  for (int j = 0; j < k; ++j) {
    const double c = cov(j, j);
    out.sigmas[static_cast<std::size_t>(j)] =
        c > 0.0 ? std::sqrt(c * s2) : 0.0;
  }
  out.converged = true;
  return out;
}

/// Replace an internally log-parametrized entry by its exponential, with the
/// delta-method standard error.
void expose_log_param(FitResult* fit, const std::string& name) {
  for (std::size_t j = 0; j < fit->names.size(); ++j) {
    if (fit->names[j] != name) continue;
    const double v = std::exp(fit->values[j]);
    fit->values[j] = v;
    fit->sigmas[j] *= v;
    return;
  }
}

}  // namespace

double FitResult::value(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return values[j];
  throw std::out_of_range("FitResult: no parameter '" + name + "'");
}

double FitResult::sigma(const std::string& name) const {
  for (std::size_t j = 0; j < names.size(); ++j)
    if (names[j] == name) return sigmas[j];
  throw std::out_of_range("FitResult: no parameter '" + name + "'");
}

FitResult fit_decay(const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<double>& yerr, const DecayModel& model) {
  const std::size_t n = x.size();
  if (n < 4) throw std::invalid_argument("fit_decay: need at least 4 points");
  if (y.size() != n) throw std::invalid_argument("fit_decay: x/y length mismatch");
  require_increasing(x, "fit_decay");
  if (!model.p_free && !(model.p > 0.0))
    throw std::invalid_argument("fit_decay: fixed exponent must be positive");
  const std::vector<double> w = make_weights(yerr, n);

  // Initial guesses: baseline from the tail, amplitude from the head, time
  // constant from the interpolated 1/e crossing of the normalized curve.
  const double offset0 = y.back();
  const double amp0 = y.front() - offset0;
  const double span = x.back() - x.front();
  double t2_0 = x.front() + 0.5 * span;
  if (amp0 != 0.0) {
    const double target = offset0 + amp0 * std::exp(-1.0);
    for (std::size_t i = 1; i < n; ++i) {
      if ((y[i] - target) * (y[0] - target) <= 0.0) {
        const double f = (target - y[i - 1]) / (y[i] - y[i - 1]);
        t2_0 = x[i - 1] + f * (x[i] - x[i - 1]);
        break;
      }
    }
  }
  t2_0 = std::max(t2_0, x.front() + 1e-3 * span);
  const double p0 = model.p_free ? 2.0 : model.p;

  const int k = model.p_free ? 4 : 3;
  std::vector<std::string> names{"amplitude", "t2", "offset"};
  Eigen::VectorXd theta(k);
  theta[0] = amp0;
  theta[1] = std::log(t2_0);
  theta[2] = offset0;
  if (model.p_free) {
    theta[3] = std::log(p0);
    names.emplace_back("p");
  }

  auto eval = [&, w](const Eigen::VectorXd& th, Eigen::VectorXd& r,
                     Eigen::MatrixXd& jac) {
    const double amp = th[0];
    const double t2 = std::exp(th[1]);
    const double off = th[2];
    const double p = model.p_free ? std::exp(th[3]) : model.p;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = x[i] <= 0.0 ? 0.0 : std::pow(x[i] / t2, p);
      const double e = std::exp(-u);
      r[static_cast<Eigen::Index>(i)] = w[i] * (y[i] - off - amp * e);
      jac(static_cast<Eigen::Index>(i), 0) = -w[i] * e;
      jac(static_cast<Eigen::Index>(i), 1) = -w[i] * amp * e * p * u;
      jac(static_cast<Eigen::Index>(i), 2) = -w[i];
      if (model.p_free) {
        const double dlnp =
            x[i] <= 0.0 ? 0.0 : amp * e * u * p * std::log(x[i] / t2);
        jac(static_cast<Eigen::Index>(i), 3) = w[i] * dlnp;
      }
    }
  };

  FitResult fit = run_lm(names, theta, eval, static_cast<int>(n),
                         yerr.empty() ? SigmaMode::kScaled : SigmaMode::kAbsolute);
  expose_log_param(&fit, "t2");
  if (model.p_free) expose_log_param(&fit, "p");
  return fit;
}

FitResult fit_oscillation(const std::vector<double>& x,
                          const std::vector<double>& y,
                          const std::vector<double>& yerr,
                          const OscillationModel& model) {
  const std::size_t n = x.size();
  if (n < 6)
    throw std::invalid_argument("fit_oscillation: need at least 6 points");
  if (y.size() != n)
    throw std::invalid_argument("fit_oscillation: x/y length mismatch");
  require_increasing(x, "fit_oscillation");
  if (!(model.envelope_power > 0.0))
    throw std::invalid_argument("fit_oscillation: envelope power must be > 0");
  const std::vector<double> w = make_weights(yerr, n);
  const double q = model.envelope_power;

  // Initial guesses: mean/rms for offset and amplitude, periodogram peak for
  // the frequency (with the phase read off the winning Fourier coefficient).
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) /
                      static_cast<double>(n);
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double amp0 = std::sqrt(2.0 * var);
  const double span = x.back() - x.front();
  const double f_lo = 0.25 / span;
  const double f_hi = 0.5 * static_cast<double>(n - 1) / span;  // ~Nyquist
  double f0 = f_lo;
  double p_best = -1.0;
  std::complex<double> z_best{0.0, 0.0};
  const int n_grid = static_cast<int>(8 * n);
  for (int j = 0; j <= n_grid; ++j) {
    const double f = f_lo + (f_hi - f_lo) * j / n_grid;
    std::complex<double> z{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i)
      z += (y[i] - mean) *
           std::exp(std::complex<double>(0.0, -constants::two_pi * f * x[i]));
    const double p = std::norm(z);
    if (p > p_best) {
      p_best = p;
      f0 = f;
      z_best = z;
    }
  }
  const double phase0 = std::arg(z_best);
  const double tau0 = 0.5 * span + x.front();

  const std::vector<std::string> names{"amplitude", "frequency", "phase",
                                       "tau", "offset"};
  Eigen::VectorXd theta(5);
  theta << amp0, std::log(f0), phase0, std::log(tau0), mean;

  auto eval = [&, w](const Eigen::VectorXd& th, Eigen::VectorXd& r,
                     Eigen::MatrixXd& jac) {
    const double amp = th[0];
    const double f = std::exp(th[1]);
    const double ph = th[2];
    const double tau = std::exp(th[3]);
    const double off = th[4];
    for (std::size_t i = 0; i < n; ++i) {
      const double u = x[i] <= 0.0 ? 0.0 : std::pow(x[i] / tau, q);
      const double e = std::exp(-u);
      const double arg = constants::two_pi * f * x[i] + ph;
      const double c = std::cos(arg);
      const double s = std::sin(arg);
      r[static_cast<Eigen::Index>(i)] = w[i] * (y[i] - off - amp * e * c);
      jac(static_cast<Eigen::Index>(i), 0) = -w[i] * e * c;
      jac(static_cast<Eigen::Index>(i), 1) =
          w[i] * amp * e * s * constants::two_pi * f * x[i];
      jac(static_cast<Eigen::Index>(i), 2) = w[i] * amp * e * s;
      jac(static_cast<Eigen::Index>(i), 3) = -w[i] * amp * e * c * q * u;
      jac(static_cast<Eigen::Index>(i), 4) = -w[i];
    }
  };

  FitResult fit = run_lm(names, theta, eval, static_cast<int>(n),
                         yerr.empty() ? SigmaMode::kScaled : SigmaMode::kAbsolute);
  expose_log_param(&fit, "frequency");
  expose_log_param(&fit, "tau");
  return fit;
}

FitResult fit_power_law(const std::vector<double>& n_values,
                        const std::vector<double>& t2_values,
                        const std::vector<double>& t2_errs) {
  const std::size_t n = n_values.size();
  if (n < 3) throw std::invalid_argument("fit_power_law: need >= 3 points");
  if (t2_values.size() != n)
    throw std::invalid_argument("fit_power_law: n/t2 length mismatch");
  require_increasing(n_values, "fit_power_law");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(n_values[i] > 0.0) || !(t2_values[i] > 0.0))
      throw std::invalid_argument("fit_power_law: values must be positive");
  }
  if (!t2_errs.empty() && t2_errs.size() != n)
    throw std::invalid_argument("fit_power_law: t2/err length mismatch");

  // Weighted straight line in log-log space; errors propagate as
  // sigma(ln t2) = err/t2.
  Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  std::vector<double> wts(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!t2_errs.empty()) {
      if (!(t2_errs[i] >= 0.0))
        throw std::invalid_argument("fit_power_law: negative error");
      wts[i] = 1.0 / std::max(t2_errs[i] / t2_values[i], kWeightFloor);
    }
    const double wi2 = wts[i] * wts[i];
    const double lx = std::log(n_values[i]);
    const double ly = std::log(t2_values[i]);
    a(0, 0) += wi2;
    a(0, 1) += wi2 * lx;
    a(1, 1) += wi2 * lx * lx;
    b[0] += wi2 * ly;
    b[1] += wi2 * lx * ly;
  }
  a(1, 0) = a(0, 1);

  FitResult out;
  out.names = {"prefactor", "beta"};
  out.values = {0.0, 0.0};
  out.sigmas = {0.0, 0.0};
  out.n_iter = 1;
  const double det = a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
  if (!(det > 1e-24 * a(0, 0) * a(1, 1))) {
    out.message = "degenerate pulse-number grid";
    return out;
  }
  const Eigen::Vector2d theta = a.inverse() * b;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double res =
        wts[i] * (std::log(t2_values[i]) - theta[0] -
                  theta[1] * std::log(n_values[i]));
    chi2 += res * res;
  }
  const double s2 =
      t2_errs.empty() ? chi2 / static_cast<double>(n - 2) : 1.0;
  const Eigen::Matrix2d cov = a.inverse();
  out.values = {std::exp(theta[0]), theta[1]};
  out.sigmas = {std::exp(theta[0]) * std::sqrt(std::max(cov(0, 0) * s2, 0.0)),
                std::sqrt(std::max(cov(1, 1) * s2, 0.0))};
  out.residual_rms = std::sqrt(chi2 / static_cast<double>(n));
  out.converged = true;
  return out;
}

FitResult fit_boltzmann(const std::vector<double>& temperatures_k,
                        const std::vector<double>& ratios,
                        const std::vector<double>& errs) {
  const std::size_t n = temperatures_k.size();
  if (n == 0) throw std::invalid_argument("fit_boltzmann: empty input");
  if (ratios.size() != n)
    throw std::invalid_argument("fit_boltzmann: T/ratio length mismatch");
  for (double t : temperatures_k)
    if (!(t > 0.0))
      throw std::invalid_argument("fit_boltzmann: temperatures must be > 0");
  const std::vector<double> w = make_weights(errs, n);

  // Seed from the log-linear relation ln r = -(h/kB) delta / T using the
  // positive ratios only.
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(ratios[i] > 0.0)) continue;
    const double g = -constants::h_over_kb / temperatures_k[i];
    num += g * std::log(ratios[i]);
    den += g * g;
  }
  double delta0 = den > 0.0 ? num / den : 0.0;
  if (!(delta0 > 0.0)) delta0 = 1e9;

  const std::vector<std::string> names{"delta"};
  Eigen::VectorXd theta(1);
  theta << std::log(delta0);
  auto eval = [&, w](const Eigen::VectorXd& th, Eigen::VectorXd& r,
                     Eigen::MatrixXd& jac) {
    const double delta = std::exp(th[0]);
    for (std::size_t i = 0; i < n; ++i) {
      const double a = constants::h_over_kb * delta / temperatures_k[i];
      const double f = std::exp(-a);
      r[static_cast<Eigen::Index>(i)] = w[i] * (ratios[i] - f);
      jac(static_cast<Eigen::Index>(i), 0) = w[i] * f * a;
    }
  };
  FitResult fit = run_lm(names, theta, eval, static_cast<int>(n),
                         errs.empty() ? SigmaMode::kScaled : SigmaMode::kAbsolute);
  expose_log_param(&fit, "delta");
  return fit;
}

}  // namespace sivsim
