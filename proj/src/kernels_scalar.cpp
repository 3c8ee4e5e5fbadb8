// SPDX-License-Identifier: Apache-2.0
//
// Reference kernels. Compiled with -ffp-contract=off so the scalar path has
// plain multiply-then-add rounding; SIMD variants are compared against these
// results in the equivalence tests.

#include "psytraj/kernels.hpp"

namespace psytraj::kern {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
  return s;
}

void dot4_scalar(const double* x, const double* rows, std::size_t ldr, std::size_t n, double* out) {
  const double* r0 = rows;
  const double* r1 = rows + ldr;
  const double* r2 = rows + 2 * ldr;
  const double* r3 = rows + 3 * ldr;
  double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
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

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void axpy4_scalar(const double* a, const double* rows, std::size_t ldr, double* y, std::size_t n) {
  const double* r0 = rows;
  const double* r1 = rows + ldr;
  const double* r2 = rows + 2 * ldr;
  const double* r3 = rows + 3 * ldr;
  const double a0 = a[0], a1 = a[1], a2 = a[2], a3 = a[3];
  for (std::size_t i = 0; i < n; ++i) {
    y[i] += a0 * r0[i] + a1 * r1[i] + a2 * r2[i] + a3 * r3[i];
  }
}

void scal_scalar(double a, double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double sumsq_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
  return s;
}

void relu_scalar(const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void relu_mask_scalar(const double* pre, double* g, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) {
    if (!(pre[i] > 0.0)) g[i] = 0.0;
  }
}

}  // namespace

const Ops& scalar_ops() {
  static const Ops ops = {
      "scalar",     dot_scalar,   dot4_scalar,  axpy_scalar,     axpy4_scalar,
      scal_scalar,  sumsq_scalar, relu_scalar,  relu_mask_scalar,
  };
  return ops;
}

}  // namespace psytraj::kern
