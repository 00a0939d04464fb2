#include "sivsim/kernels.hpp"

#if defined(__AVX2__)

#include <immintrin.h>

namespace sivsim::kernels {

namespace {

// Four matrix rows ride in the vector lanes; the j-loop broadcasts x[j] and
// accumulates in exactly the scalar order (mul, sub/add, then accumulate), so
// each lane performs the same operation sequence as the scalar reference.
void zgemv_avx2(std::size_t n, const double* a_re, const double* a_im,
                const double* x_re, const double* x_im, double* y_re,
                double* y_im) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d acc_r = _mm256_setzero_pd();
    __m256d acc_i = _mm256_setzero_pd();
    for (std::size_t j = 0; j < n; ++j) {
      const __m256d ar = _mm256_loadu_pd(a_re + j * n + i);
      const __m256d ai = _mm256_loadu_pd(a_im + j * n + i);
      const __m256d xr = _mm256_set1_pd(x_re[j]);
      const __m256d xi = _mm256_set1_pd(x_im[j]);
      const __m256d tr =
          _mm256_sub_pd(_mm256_mul_pd(ar, xr), _mm256_mul_pd(ai, xi));
      const __m256d ti =
          _mm256_add_pd(_mm256_mul_pd(ar, xi), _mm256_mul_pd(ai, xr));
      acc_r = _mm256_add_pd(acc_r, tr);
      acc_i = _mm256_add_pd(acc_i, ti);
    }
    _mm256_storeu_pd(y_re + i, acc_r);
    _mm256_storeu_pd(y_im + i, acc_i);
  }
  for (; i < n; ++i) {  // remainder rows: scalar reference order
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

void axpy_avx2(std::size_t n, double alpha, const double* x, double* y) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d yv = _mm256_loadu_pd(y + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(yv, _mm256_mul_pd(a, xv)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void xpay_avx2(std::size_t n, const double* x, double alpha, const double* k,
               double* y) {
  const __m256d a = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d kv = _mm256_loadu_pd(k + i);
    _mm256_storeu_pd(y + i, _mm256_add_pd(xv, _mm256_mul_pd(a, kv)));
  }
  for (; i < n; ++i) y[i] = x[i] + alpha * k[i];
}

void ou_phase_step_avx2(std::size_t n, double decay, double amp,
                        const double* xi, double* x, double sdt, double* phi) {
  const __m256d d = _mm256_set1_pd(decay);
  const __m256d a = _mm256_set1_pd(amp);
  const __m256d s = _mm256_set1_pd(sdt);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d xiv = _mm256_loadu_pd(xi + i);
    xv = _mm256_add_pd(_mm256_mul_pd(xv, d), _mm256_mul_pd(a, xiv));
    _mm256_storeu_pd(x + i, xv);
    const __m256d pv = _mm256_loadu_pd(phi + i);
    _mm256_storeu_pd(phi + i, _mm256_add_pd(pv, _mm256_mul_pd(xv, s)));
  }
  for (; i < n; ++i) {
    x[i] = x[i] * decay + amp * xi[i];
    phi[i] += x[i] * sdt;
  }
}

}  // namespace

const Dispatch* avx2_table() {
  static const Dispatch table{zgemv_avx2, axpy_avx2, xpay_avx2,
                              ou_phase_step_avx2, "avx2"};
  return &table;
}

}  // namespace sivsim::kernels

#else  // !__AVX2__

namespace sivsim::kernels {
const Dispatch* avx2_table() { return nullptr; }
}  // namespace sivsim::kernels

#endif
