// SPDX-License-Identifier: Apache-2.0
//
// Independent oracles used by the test suites. These deliberately avoid the
// library's own code paths: the eigensolver checks the SVD, the sort-based
// median checks the sliding filter, and the parameter flattener drives
// finite-difference gradient checks.
#pragma once

#include <cstddef>
#include <vector>

#include "psytraj/linalg.hpp"
#include "psytraj/nn.hpp"

namespace psytraj::oracle {

// Eigenvalues of a symmetric matrix by the classic two-sided cyclic Jacobi
// method, sorted descending.
std::vector<double> symmetric_eigenvalues(const linalg::Matrix& s);

// Sliding median with a centered window of `window` samples, truncated at
// the boundaries, each window median computed by copying and sorting.
std::vector<double> sorted_window_median(const std::vector<double>& x, std::size_t window);

// Flat parameter indexing over weights: layer by layer, weight matrix
// row-major, then bias.
std::size_t param_count(const nn::Weights& w);
double get_param(const nn::Weights& w, std::size_t idx);
void set_param(nn::Weights& w, std::size_t idx, double value);

// max |a - b| / max(1e-6, |a|, |b|) over all parameters.
double max_relative_error(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace psytraj::oracle
