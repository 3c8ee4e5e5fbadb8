// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

namespace psytraj::linalg {

// Dense row-major matrix. Small: everything in this project is at most a few
// hundred rows or columns wide, except tall latent/frame matrices.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> v;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), v(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return v[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return v[r * cols + c]; }
  double* row(std::size_t r) { return v.data() + r * cols; }
  const double* row(std::size_t r) const { return v.data() + r * cols; }
  std::size_t size() const { return v.size(); }
  bool finite() const;
  void fill(double x);

  static Matrix identity(std::size_t n);
};

// Non-owning view over a contiguous row range (used for minibatches).
struct ConstView {
  const double* data = nullptr;
  std::size_t rows = 0;
  std::size_t cols = 0;

  ConstView() = default;
  ConstView(const double* d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {}
  ConstView(const Matrix& m) : data(m.v.data()), rows(m.rows), cols(m.cols) {}  // NOLINT

  const double* row(std::size_t r) const { return data + r * cols; }
};

inline ConstView view_rows(const Matrix& m, std::size_t r0, std::size_t r1) {
  return ConstView(m.row(r0), r1 - r0, m.cols);
}

Matrix transpose(const Matrix& a);
Matrix matmul(const Matrix& a, const Matrix& b);

struct SvdResult {
  Matrix u;                // rows x k, orthonormal columns
  std::vector<double> s;   // k singular values, nonincreasing, >= 0
  Matrix v;                // cols x k, orthonormal columns
};

// Full SVD of a small dense matrix by one-sided Jacobi (cyclic sweeps,
// rotations applied until every off-diagonal column dot falls below 1e-12
// relative, max 60 sweeps). Deterministic; the sign convention makes the
// largest-magnitude entry of each V column positive.
SvdResult svd(const Matrix& a);

// Nearest matrix with orthonormal columns in the Frobenius norm: Q = U*V^T.
// Requires rows >= cols and smallest singular value > 1e-10.
Matrix polar_orthonormalize(const Matrix& w);

// Angle in degrees between every unordered column pair (i < j, lexicographic
// order). Columns must have norm > 1e-12.
std::vector<double> pairwise_angles(const Matrix& columns);

// Angle helper shared with the ortho module: cosines (clamped to [-1, 1]) for
// every column pair in lexicographic order.
std::vector<double> pairwise_cosines(const Matrix& columns);

double angle_deg_from_cosine(double c);

}  // namespace psytraj::linalg
