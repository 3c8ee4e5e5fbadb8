// SPDX-License-Identifier: Apache-2.0
#include "psytraj/kernels.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace psytraj::kern {

namespace {

bool cpu_has_avx2() {
#if defined(PSYTRAJ_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* best_supported() {
#if defined(PSYTRAJ_HAVE_AVX2)
  if (cpu_has_avx2()) return &avx2_ops();
#endif
#if defined(PSYTRAJ_HAVE_NEON)
  return &neon_ops();
#endif
  return &scalar_ops();
}

const Ops* resolve() {
  const char* env = std::getenv("PSYTRAJ_KERNEL");
  if (env != nullptr && env[0] != '\0') {
    if (const Ops* named = find(env)) return named;
    std::fprintf(stderr, "psytraj: kernel variant '%s' unavailable, using '%s'\n", env,
                 best_supported()->name);
  }
  return best_supported();
}

}  // namespace

const Ops& active() {
  static const Ops* ops = resolve();
  return *ops;
}

std::vector<const Ops*> available() {
  std::vector<const Ops*> out;
  out.push_back(&scalar_ops());
#if defined(PSYTRAJ_HAVE_AVX2)
  if (cpu_has_avx2()) out.push_back(&avx2_ops());
#endif
#if defined(PSYTRAJ_HAVE_NEON)
  out.push_back(&neon_ops());
#endif
  return out;
}

const Ops* find(std::string_view name) {
  for (const Ops* ops : available()) {
    if (name == ops->name) return ops;
  }
  return nullptr;
}

}  // namespace psytraj::kern
