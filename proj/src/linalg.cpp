// SPDX-License-Identifier: Apache-2.0
#include "psytraj/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include "psytraj/error.hpp"
#include "psytraj/kernels.hpp"

namespace psytraj::linalg {

bool Matrix::finite() const {
  for (double x : v) {
    if (!std::isfinite(x)) return false;
  }
  return true;
}

void Matrix::fill(double x) { std::fill(v.begin(), v.end(), x); }

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
  return m;
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t r = 0; r < a.rows; ++r) {
    for (std::size_t c = 0; c < a.cols; ++c) {
      t.at(c, r) = a.at(r, c);
    }
  }
  return t;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols != b.rows) {
    fail(errc::shape_mismatch, "matmul: " + std::to_string(a.cols) + " != " + std::to_string(b.rows));
  }
  const auto& k = kern::active();
  Matrix c(a.rows, b.cols, 0.0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    const double* arow = a.row(r);
    double* crow = c.row(r);
    for (std::size_t i = 0; i < a.cols; ++i) {
      k.axpy(arow[i], b.row(i), crow, b.cols);
    }
  }
  return c;
}

namespace {

constexpr double kJacobiTol = 1e-12;
constexpr int kMaxSweeps = 60;

// Column-major working storage: column j lives at data() + j*m, contiguous,
// so the dot/axpy kernels apply directly.
struct ColMat {
  std::size_t m = 0, n = 0;
  std::vector<double> v;

  ColMat(std::size_t rows, std::size_t cols) : m(rows), n(cols), v(rows * cols, 0.0) {}
  double* col(std::size_t j) { return v.data() + j * m; }
  const double* col(std::size_t j) const { return v.data() + j * m; }
};

void rotate_cols(double* p, double* q, std::size_t m, double cs, double sn) {
  for (std::size_t i = 0; i < m; ++i) {
    const double t = p[i];
    p[i] = cs * t - sn * q[i];
    q[i] = sn * t + cs * q[i];
  }
}

// One-sided Jacobi on a tall (m >= n) matrix held column-major in G.
// V accumulates the right rotations; on return the columns of G are mutually
// orthogonal and G = U * diag(s) * V^T reconstructs the input.
void jacobi_sweeps(ColMat& g, ColMat& vmat) {
  const auto& k = kern::active();
  const std::size_t n = g.n;
  if (n < 2) return;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double worst = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        double* gp = g.col(p);
        double* gq = g.col(q);
        const double app = k.dot(gp, gp, g.m);
        const double aqq = k.dot(gq, gq, g.m);
        const double apq = k.dot(gp, gq, g.m);
        const double denom = std::sqrt(app * aqq);
        if (denom <= 0.0) continue;
        const double off = std::abs(apq) / denom;
        worst = std::max(worst, off);
        if (off <= kJacobiTol) continue;
        const double zeta = (aqq - app) / (2.0 * apq);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        rotate_cols(gp, gq, g.m, cs, sn);
        rotate_cols(vmat.col(p), vmat.col(q), vmat.m, cs, sn);
      }
    }
    if (worst <= kJacobiTol) break;
  }
}

// Deterministic orthonormal completion for columns whose singular value is
// numerically zero: Gram-Schmidt of canonical basis vectors against the
// already-established columns of U.
void complete_column(ColMat& u, std::size_t target, const std::vector<bool>& established) {
  const std::size_t m = u.m;
  std::vector<double> w(m);
  for (std::size_t cand = 0; cand < m; ++cand) {
    std::fill(w.begin(), w.end(), 0.0);
    w[cand] = 1.0;
    for (std::size_t j = 0; j < u.n; ++j) {
      if (!established[j]) continue;
      const double* uj = u.col(j);
      double proj = 0.0;
      for (std::size_t i = 0; i < m; ++i) proj += uj[i] * w[i];
      for (std::size_t i = 0; i < m; ++i) w[i] -= proj * uj[i];
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.5) {
      double* ut = u.col(target);
      for (std::size_t i = 0; i < m; ++i) ut[i] = w[i] / norm;
      return;
    }
  }
  fail(errc::degenerate, "svd: failed to complete orthonormal basis");
}

SvdResult svd_tall(const Matrix& a) {
  const std::size_t m = a.rows;
  const std::size_t n = a.cols;
  ColMat g(m, n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) {
      g.col(c)[r] = a.at(r, c);
    }
  }
  ColMat vmat(n, n);
  for (std::size_t j = 0; j < n; ++j) vmat.col(j)[j] = 1.0;

  jacobi_sweeps(g, vmat);

  std::vector<double> sigma(n);
  for (std::size_t j = 0; j < n; ++j) {
    sigma[j] = std::sqrt(kern::active().sumsq(g.col(j), m));
  }

  // Sort nonincreasing; stable so equal singular values keep column order.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  ColMat u(m, n);
  ColMat vsorted(n, n);
  std::vector<double> s(n);
  double smax = 0.0;
  for (std::size_t j = 0; j < n; ++j) smax = std::max(smax, sigma[order[j]]);
  const double zero_tol = smax * static_cast<double>(std::max(m, n)) * 1e-16;

  std::vector<bool> established(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t src = order[j];
    s[j] = sigma[src];
    std::copy(vmat.col(src), vmat.col(src) + n, vsorted.col(j));
    if (sigma[src] > zero_tol && sigma[src] > 0.0) {
      const double inv = 1.0 / sigma[src];
      const double* gc = g.col(src);
      double* uc = u.col(j);
      for (std::size_t i = 0; i < m; ++i) uc[i] = gc[i] * inv;
      established[j] = true;
    } else {
      s[j] = 0.0;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (!established[j]) {
      complete_column(u, j, established);
      established[j] = true;
    }
  }

  // Sign convention: the largest-magnitude entry (first occurrence) of each V
  // column is positive; U flips with V so the product is unchanged.
  for (std::size_t j = 0; j < n; ++j) {
    double* vc = vsorted.col(j);
    std::size_t idx = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double mag = std::abs(vc[i]);
      if (mag > best) {
        best = mag;
        idx = i;
      }
    }
    if (vc[idx] < 0.0) {
      for (std::size_t i = 0; i < n; ++i) vc[i] = -vc[i];
      double* uc = u.col(j);
      for (std::size_t i = 0; i < m; ++i) uc[i] = -uc[i];
    }
  }

  SvdResult out;
  out.s = std::move(s);
  out.u = Matrix(m, n);
  out.v = Matrix(n, n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) out.u.at(r, c) = u.col(c)[r];
  }
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < n; ++c) out.v.at(r, c) = vsorted.col(c)[r];
  }
  return out;
}

}  // namespace

SvdResult svd(const Matrix& a) {
  if (a.rows == 0 || a.cols == 0) fail(errc::shape_mismatch, "svd: empty matrix");
  if (!a.finite()) fail(errc::nonfinite, "svd: non-finite input");
  if (a.rows >= a.cols) return svd_tall(a);
  SvdResult t = svd_tall(transpose(a));
  SvdResult out;
  out.u = std::move(t.v);
  out.v = std::move(t.u);
  out.s = std::move(t.s);
  // Re-apply the sign convention to the swapped factors.
  const std::size_t k = out.s.size();
  for (std::size_t j = 0; j < k; ++j) {
    std::size_t idx = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < out.v.rows; ++i) {
      const double mag = std::abs(out.v.at(i, j));
      if (mag > best) {
        best = mag;
        idx = i;
      }
    }
    if (out.v.at(idx, j) < 0.0) {
      for (std::size_t i = 0; i < out.v.rows; ++i) out.v.at(i, j) = -out.v.at(i, j);
      for (std::size_t i = 0; i < out.u.rows; ++i) out.u.at(i, j) = -out.u.at(i, j);
    }
  }
  return out;
}

Matrix polar_orthonormalize(const Matrix& w) {
  if (w.rows < w.cols) {
    fail(errc::shape_mismatch, "polar_orthonormalize: need rows >= cols, got " +
                                   std::to_string(w.rows) + "x" + std::to_string(w.cols));
  }
  SvdResult f = svd(w);
  if (f.s.back() <= 1e-10) {
    fail(errc::rank_deficient,
         "polar_orthonormalize: rank-deficient input (sigma_min = " + std::to_string(f.s.back()) + ")");
  }
  return matmul(f.u, transpose(f.v));
}

std::vector<double> pairwise_cosines(const Matrix& columns) {
  const std::size_t n = columns.cols;
  const std::size_t m = columns.rows;
  std::vector<std::vector<double>> cols(n, std::vector<double>(m));
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n; ++c) cols[c][r] = columns.at(r, c);
  }
  const auto& k = kern::active();
  std::vector<double> norms(n);
  for (std::size_t c = 0; c < n; ++c) {
    norms[c] = std::sqrt(k.sumsq(cols[c].data(), m));
    if (norms[c] <= 1e-12) {
      fail(errc::degenerate, "pairwise angles: column " + std::to_string(c) + " has near-zero norm");
    }
  }
  std::vector<double> out;
  out.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = k.dot(cols[i].data(), cols[j].data(), m);
      out.push_back(std::clamp(d / (norms[i] * norms[j]), -1.0, 1.0));
    }
  }
  return out;
}

double angle_deg_from_cosine(double c) {
  return std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / std::numbers::pi;
}

std::vector<double> pairwise_angles(const Matrix& columns) {
  std::vector<double> cosines = pairwise_cosines(columns);
  std::vector<double> out(cosines.size());
  for (std::size_t i = 0; i < cosines.size(); ++i) out[i] = angle_deg_from_cosine(cosines[i]);
  return out;
}

}  // namespace psytraj::linalg
