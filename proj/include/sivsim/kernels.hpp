#pragma once

#include <cstddef>

namespace sivsim::kernels {

/**
 * @brief Numeric hot-loop kernels with scalar reference and SIMD variants.
 *
 * The scalar implementations are the semantic reference; SIMD variants must
 * produce bit-identical results.  That is achievable because every kernel is
 * either elementwise or reduces per output element in a fixed order, complex
 * data is stored planar (separate re/im arrays), and the build disables FP
 * contraction (no implicit FMA).  The variant is chosen once at runtime from
 * cpuid, overridable via the SIVSIM_KERNELS environment variable
 * (auto|scalar|avx2) or force() in tests.
 */
struct Dispatch {
  /// Complex matrix-vector product y = A·x.  A is n×n, planar column-major:
  /// element (i,j) at a_re[j*n+i] / a_im[j*n+i].  Accumulation order over j is
  /// ascending for every row, in both variants.
  void (*zgemv)(std::size_t n, const double* a_re, const double* a_im,
                const double* x_re, const double* x_im, double* y_re,
                double* y_im);

  /// y += alpha·x over n doubles (applied separately to re/im planes).
  void (*axpy)(std::size_t n, double alpha, const double* x, double* y);

  /// y = x + alpha·k over n doubles (RK4 stage state).
  void (*xpay)(std::size_t n, const double* x, double alpha, const double* k,
               double* y);

  /// One Ornstein-Uhlenbeck step plus phase accumulation over n independent
  /// Monte Carlo lanes: x[i] = x[i]*decay + amp*xi[i]; phi[i] += x[i]*sdt.
  void (*ou_phase_step)(std::size_t n, double decay, double amp,
                        const double* xi, double* x, double sdt, double* phi);

  const char* name;  ///< "scalar" or "avx2"
};

/// Reference implementation (always available).
const Dispatch& scalar_table();

/// AVX2 implementation, or nullptr when unsupported by the build target.
const Dispatch* avx2_table();

/// True when the running CPU supports AVX2.
bool cpu_has_avx2();

/// The active table: resolved on first call (cpuid + SIVSIM_KERNELS).
const Dispatch& active();

/// Test hook: force a specific table ("scalar"/"avx2"/"auto").
/// Returns false if the request cannot be honored on this CPU.
bool force(const char* which);

}  // namespace sivsim::kernels
