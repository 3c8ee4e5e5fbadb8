// SPDX-License-Identifier: Apache-2.0
//
// NEON variants for aarch64 (float64x2, FMA via vfmaq_f64). NEON is baseline
// on aarch64, so these need no runtime feature check.

#include "psytraj/kernels.hpp"

#if defined(PSYTRAJ_HAVE_NEON)

#include <arm_neon.h>

namespace psytraj::kern {

namespace {

inline double hsum(float64x2_t v) { return vgetq_lane_f64(v, 0) + vgetq_lane_f64(v, 1); }

double dot_neon(const double* x, const double* y, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
  }
  double s = hsum(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

void dot4_neon(const double* x, const double* rows, std::size_t ldr, std::size_t n, double* out) {
  const double* r0 = rows;
  const double* r1 = rows + ldr;
  const double* r2 = rows + 2 * ldr;
  const double* r3 = rows + 3 * ldr;
  float64x2_t a0 = vdupq_n_f64(0.0);
  float64x2_t a1 = vdupq_n_f64(0.0);
  float64x2_t a2 = vdupq_n_f64(0.0);
  float64x2_t a3 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t xv = vld1q_f64(x + i);
    a0 = vfmaq_f64(a0, xv, vld1q_f64(r0 + i));
    a1 = vfmaq_f64(a1, xv, vld1q_f64(r1 + i));
    a2 = vfmaq_f64(a2, xv, vld1q_f64(r2 + i));
    a3 = vfmaq_f64(a3, xv, vld1q_f64(r3 + i));
  }
  double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
  for (; i < n; ++i) {
    const double xi = x[i];
    s0 += xi * r0[i];
    s1 += xi * r1[i];
    s2 += xi * r2[i];
    s3 += xi * r3[i];
  }
  out[0] = s0;
  out[1] = s1;
  out[2] = s2;
  out[3] = s3;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), av, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void axpy4_neon(const double* a, const double* rows, std::size_t ldr, double* y, std::size_t n) {
  const double* r0 = rows;
  const double* r1 = rows + ldr;
  const double* r2 = rows + 2 * ldr;
  const double* r3 = rows + 3 * ldr;
  const float64x2_t a0 = vdupq_n_f64(a[0]);
  const float64x2_t a1 = vdupq_n_f64(a[1]);
  const float64x2_t a2 = vdupq_n_f64(a[2]);
  const float64x2_t a3 = vdupq_n_f64(a[3]);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    float64x2_t acc = vld1q_f64(y + i);
    acc = vfmaq_f64(acc, a0, vld1q_f64(r0 + i));
    acc = vfmaq_f64(acc, a1, vld1q_f64(r1 + i));
    acc = vfmaq_f64(acc, a2, vld1q_f64(r2 + i));
    acc = vfmaq_f64(acc, a3, vld1q_f64(r3 + i));
    vst1q_f64(y + i, acc);
  }
  for (; i < n; ++i) {
    y[i] += a[0] * r0[i] + a[1] * r1[i] + a[2] * r2[i] + a[3] * r3[i];
  }
}

void scal_neon(double a, double* x, std::size_t n) {
  const float64x2_t av = vdupq_n_f64(a);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(x + i, vmulq_f64(av, vld1q_f64(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

double sumsq_neon(const double* x, std::size_t n) { return dot_neon(x, x, n); }

void relu_neon(const double* x, double* y, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    vst1q_f64(y + i, vmaxq_f64(vld1q_f64(x + i), zero));
  }
  for (; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask_neon(const double* pre, double* g, std::size_t n) {
  const float64x2_t zero = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const uint64x2_t mask = vcgtq_f64(vld1q_f64(pre + i), zero);
    const float64x2_t gv = vld1q_f64(g + i);
    vst1q_f64(g + i, vreinterpretq_f64_u64(vandq_u64(vreinterpretq_u64_f64(gv), mask)));
  }
  for (; i < n; ++i) {
    if (!(pre[i] > 0.0)) g[i] = 0.0;
  }
}

}  // namespace

const Ops& neon_ops() {
  static const Ops ops = {
      "neon",    dot_neon,   dot4_neon, axpy_neon,      axpy4_neon,
      scal_neon, sumsq_neon, relu_neon, relu_mask_neon,
  };
  return ops;
}

}  // namespace psytraj::kern

#endif  // PSYTRAJ_HAVE_NEON
