// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <vector>

#include "psytraj/linalg.hpp"
#include "psytraj/nn.hpp"

namespace psytraj::ortho {

// Pairwise angles between the mean-centered latent activation columns, and
// the penalty P = sum cos^2(theta_ij) that is zero exactly at mutual
// orthogonality.
struct AnglePenaltyReport {
  double penalty = 0.0;
  std::vector<double> angles_deg;      // pair order (0,1), (0,2), ..., lexicographic
  double max_deviation_deg = 0.0;      // max |angle - 90|
};

struct OrthoConfig {
  double tolerance_deg = 0.3;          // Fig-2-style 0.15 also accepted; see TrainConfig
  double penalty_weight = 1.0;         // lambda
  bool orthonormalize_each_epoch = true;
};

// Z is an N x L latent batch, N >= 2. Columns are centered before the angle
// computation; a zero-variance latent dimension is a degenerate-latent error.
AnglePenaltyReport angular_penalty(const linalg::Matrix& z);

// Exact gradient of the penalty w.r.t. every entry of Z (centering included).
// Returns the penalty value and fills dz with the same shape as Z.
double angular_penalty_grad(const linalg::Matrix& z, linalg::Matrix& dz);

struct OrthonormalizeOutcome {
  bool applied = false;  // false: latent weight matrix was rank-deficient, left untouched
};

// Replaces the encoder's latent-layer weight matrix (L x in) by the
// transpose of the polar orthonormalization of its transpose, making its
// rows orthonormal. All other layers are untouched. Rank deficiency skips
// the step instead of aborting, since early training can transiently
// collapse.
OrthonormalizeOutcome epoch_orthonormalize(nn::Weights& w, const nn::NetworkSpec& spec);

bool check_convergence(const AnglePenaltyReport& report, const OrthoConfig& cfg);

}  // namespace psytraj::ortho
