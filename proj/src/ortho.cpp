// SPDX-License-Identifier: Apache-2.0
#include "psytraj/ortho.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "psytraj/error.hpp"
#include "psytraj/kernels.hpp"

namespace psytraj::ortho {

namespace {

struct CenteredColumns {
  std::vector<std::vector<double>> cols;
  std::vector<double> norms;
};

CenteredColumns center_columns(const linalg::Matrix& z) {
  if (z.rows < 2) {
    fail(errc::insufficient_data,
         "angular penalty: need at least 2 samples, got " + std::to_string(z.rows));
  }
  const std::size_t n = z.rows;
  const std::size_t l = z.cols;
  CenteredColumns out;
  out.cols.assign(l, std::vector<double>(n));
  out.norms.assign(l, 0.0);
  for (std::size_t c = 0; c < l; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += z.at(r, c);
    mean /= static_cast<double>(n);
    auto& col = out.cols[c];
    for (std::size_t r = 0; r < n; ++r) col[r] = z.at(r, c) - mean;
    out.norms[c] = std::sqrt(kern::active().sumsq(col.data(), n));
    if (out.norms[c] <= 1e-12) {
      fail(errc::degenerate,
           "angular penalty: latent dimension " + std::to_string(c) + " has zero variance");
    }
  }
  return out;
}

}  // namespace

AnglePenaltyReport angular_penalty(const linalg::Matrix& z) {
  const CenteredColumns cc = center_columns(z);
  const auto& k = kern::active();
  const std::size_t l = z.cols;
  AnglePenaltyReport report;
  report.angles_deg.reserve(l * (l - 1) / 2);
  for (std::size_t i = 0; i + 1 < l; ++i) {
    for (std::size_t j = i + 1; j < l; ++j) {
      const double d = k.dot(cc.cols[i].data(), cc.cols[j].data(), z.rows);
      const double c = std::clamp(d / (cc.norms[i] * cc.norms[j]), -1.0, 1.0);
      report.penalty += c * c;
      const double angle = linalg::angle_deg_from_cosine(c);
      report.angles_deg.push_back(angle);
      report.max_deviation_deg = std::max(report.max_deviation_deg, std::abs(angle - 90.0));
    }
  }
  return report;
}

double angular_penalty_grad(const linalg::Matrix& z, linalg::Matrix& dz) {
  const CenteredColumns cc = center_columns(z);
  const auto& k = kern::active();
  const std::size_t n = z.rows;
  const std::size_t l = z.cols;

  std::vector<std::vector<double>> grad_cols(l, std::vector<double>(n, 0.0));
  double penalty = 0.0;
  for (std::size_t i = 0; i + 1 < l; ++i) {
    for (std::size_t j = i + 1; j < l; ++j) {
      const double ni = cc.norms[i];
      const double nj = cc.norms[j];
      const double d = k.dot(cc.cols[i].data(), cc.cols[j].data(), n);
      const double c = std::clamp(d / (ni * nj), -1.0, 1.0);
      penalty += c * c;
      // d(cos^2)/du = 2c * (v/(|u||v|) - c*u/|u|^2), symmetric in the pair.
      const double cross = 2.0 * c / (ni * nj);
      k.axpy(cross, cc.cols[j].data(), grad_cols[i].data(), n);
      k.axpy(-2.0 * c * c / (ni * ni), cc.cols[i].data(), grad_cols[i].data(), n);
      k.axpy(cross, cc.cols[i].data(), grad_cols[j].data(), n);
      k.axpy(-2.0 * c * c / (nj * nj), cc.cols[j].data(), grad_cols[j].data(), n);
    }
  }

  // Chain through the centering: subtract each gradient column's mean.
  if (dz.rows != n || dz.cols != l) dz = linalg::Matrix(n, l);
  for (std::size_t c = 0; c < l; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < n; ++r) mean += grad_cols[c][r];
    mean /= static_cast<double>(n);
    for (std::size_t r = 0; r < n; ++r) dz.at(r, c) = grad_cols[c][r] - mean;
  }
  return penalty;
}

OrthonormalizeOutcome epoch_orthonormalize(nn::Weights& w, const nn::NetworkSpec& spec) {
  linalg::Matrix& latent_w = w.layers[spec.latent_layer].w;  // L x in
  if (latent_w.rows > latent_w.cols) {
    // Fewer inputs than latent rows: cannot have orthonormal rows.
    return {false};
  }
  try {
    const linalg::Matrix q = linalg::polar_orthonormalize(linalg::transpose(latent_w));
    latent_w = linalg::transpose(q);
  } catch (const error& e) {
    if (e.code() == errc::rank_deficient) return {false};
    throw;
  }
  return {true};
}

bool check_convergence(const AnglePenaltyReport& report, const OrthoConfig& cfg) {
  return report.max_deviation_deg <= cfg.tolerance_deg;
}

}  // namespace psytraj::ortho
