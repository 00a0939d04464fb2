#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "sivsim/kernels.hpp"

namespace sivsim::kernels {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

namespace {

const Dispatch* g_active = nullptr;

const Dispatch* resolve_auto() {
  if (cpu_has_avx2() && avx2_table()) return avx2_table();
  return &scalar_table();
}

const Dispatch* resolve_from_env() {
  const char* env = std::getenv("SIVSIM_KERNELS");
  if (!env || std::strcmp(env, "auto") == 0) return resolve_auto();
  if (std::strcmp(env, "scalar") == 0) return &scalar_table();
  if (std::strcmp(env, "avx2") == 0) {
    if (cpu_has_avx2() && avx2_table()) return avx2_table();
    std::fprintf(stderr,
                 "sivsim: SIVSIM_KERNELS=avx2 requested but unsupported on "
                 "this CPU; using scalar kernels\n");
    return &scalar_table();
  }
  std::fprintf(stderr, "sivsim: unknown SIVSIM_KERNELS value '%s'; using auto\n",
               env);
  return resolve_auto();
}

}  // namespace

const Dispatch& active() {
  if (!g_active) g_active = resolve_from_env();
  return *g_active;
}

bool force(const char* which) {
  if (std::strcmp(which, "scalar") == 0) {
    g_active = &scalar_table();
    return true;
  }
  if (std::strcmp(which, "avx2") == 0) {
    if (!(cpu_has_avx2() && avx2_table())) return false;
    g_active = avx2_table();
    return true;
  }
  if (std::strcmp(which, "auto") == 0) {
    g_active = resolve_auto();
    return true;
  }
  return false;
}

}  // namespace sivsim::kernels
