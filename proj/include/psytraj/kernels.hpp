// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace psytraj::kern {

// Dispatch table for the arithmetic inner loops (dense dot/axpy style
// primitives the network and linear algebra code are built from). A scalar
// reference implementation always exists; SIMD variants (AVX2+FMA on x86-64,
// NEON on aarch64) are selected once at runtime and equivalence-tested
// against the reference. SIMD variants may reassociate sums, so reductions
// agree with the scalar path to rounding, not bit-for-bit.
struct Ops {
  const char* name;

  // sum_i x[i]*y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // out[k] = dot(x, rows + k*ldr), k = 0..3 (four consecutive matrix rows)
  void (*dot4)(const double* x, const double* rows, std::size_t ldr, std::size_t n, double* out);
  // y += a*x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y += a[0]*r0 + a[1]*r1 + a[2]*r2 + a[3]*r3, rk = rows + k*ldr
  void (*axpy4)(const double* a, const double* rows, std::size_t ldr, double* y, std::size_t n);
  // x *= a
  void (*scal)(double a, double* x, std::size_t n);
  // sum_i x[i]^2
  double (*sumsq)(const double* x, std::size_t n);
  // y[i] = max(x[i], 0)
  void (*relu)(const double* x, double* y, std::size_t n);
  // g[i] = pre[i] > 0 ? g[i] : 0
  void (*relu_mask)(const double* pre, double* g, std::size_t n);
};

const Ops& scalar_ops();
#if defined(PSYTRAJ_HAVE_AVX2)
const Ops& avx2_ops();
#endif
#if defined(PSYTRAJ_HAVE_NEON)
const Ops& neon_ops();
#endif

// Kernels chosen for this process: the best variant the CPU supports,
// overridable with PSYTRAJ_KERNEL=scalar|avx2|neon. Resolved once.
const Ops& active();

// Variants compiled in and runnable on this machine.
std::vector<const Ops*> available();

// nullptr when `name` is unknown or unsupported here.
const Ops* find(std::string_view name);

}  // namespace psytraj::kern
