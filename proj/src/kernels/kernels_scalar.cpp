#include "sivsim/kernels.hpp"

namespace sivsim::kernels {

namespace {

void zgemv_scalar(std::size_t n, const double* a_re, const double* a_im,
                  const double* x_re, const double* x_im, double* y_re,
                  double* y_im) {
  for (std::size_t i = 0; i < n; ++i) {
    double acc_r = 0.0, acc_i = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      const double ar = a_re[j * n + i];
      const double ai = a_im[j * n + i];
      const double xr = x_re[j];
      const double xi = x_im[j];
      const double tr = ar * xr - ai * xi;
      const double ti = ar * xi + ai * xr;
      acc_r += tr;
      acc_i += ti;
    }
    y_re[i] = acc_r;
    y_im[i] = acc_i;
  }
}

void axpy_scalar(std::size_t n, double alpha, const double* x, double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void xpay_scalar(std::size_t n, const double* x, double alpha, const double* k,
                 double* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + alpha * k[i];
}

void ou_phase_step_scalar(std::size_t n, double decay, double amp,
                          const double* xi, double* x, double sdt,
                          double* phi) {
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = x[i] * decay + amp * xi[i];
    phi[i] += x[i] * sdt;
  }
}

}  // namespace

const Dispatch& scalar_table() {
  static const Dispatch table{zgemv_scalar, axpy_scalar, xpay_scalar,
                              ou_phase_step_scalar, "scalar"};
  return table;
}

}  // namespace sivsim::kernels
