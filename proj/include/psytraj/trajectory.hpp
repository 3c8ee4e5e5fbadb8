// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "psytraj/linalg.hpp"
#include "psytraj/trainer.hpp"

namespace psytraj::trajectory {

// Latent point cloud of eyes-closed baseline data: its centroid (the frame
// origin) and the top-3 right singular vectors of the centered cloud.
struct RestingManifold {
  linalg::Matrix points;                // N x L
  std::vector<double> centroid;         // L
  linalg::Matrix basis3;                // L x 3, orthonormal columns
  std::vector<double> singular_values;  // diagnostics
  bool degenerate = false;              // fewer than 3 clearly nonzero singular values
};

struct Trajectory {
  double sample_rate_hz = 300.0;
  linalg::Matrix coords;  // T x 3, manifold-frame coordinates (latent units)
  std::string condition;
};

struct Kinematics {
  linalg::Matrix velocity;      // T x 3, latent units / s
  linalg::Matrix acceleration;  // T x 3, latent units / s^2
  std::vector<double> speed;    // T
};

struct SeparationReport {
  double centroid_distance = 0.0;
  double spread_a = 0.0;  // mean distance of samples to their own centroid
  double spread_b = 0.0;
  double ratio = 0.0;     // centroid_distance / mean(spread_a, spread_b)
};

// Latent row per frame, order preserved. The recording must already be
// normalized with the model's stats.
linalg::Matrix encode_sequence(const trainer::TrainedModel& model, const signal::Recording& rec);

// Needs N >= 4 points and L >= 3. When the cloud has fewer than 3 clearly
// nonzero singular values the basis is still orthonormal (completed
// deterministically) but flagged degenerate.
RestingManifold build_manifold(const linalg::Matrix& latents);

// coords = (latents - centroid) * basis3; exactly 3-D regardless of L.
Trajectory to_trajectory(const linalg::Matrix& latents, const RestingManifold& manifold,
                         double sample_rate_hz, std::string condition);

// Per-axis sliding median, centered window of round(window_ms/1000 * rate)
// samples forced odd, truncated at the boundaries (no padding). Output
// length equals input length. 100 ms and 6 s at 300 Hz give the 31- and
// 1801-sample presets.
Trajectory median_filter(const Trajectory& traj, double window_ms);

std::size_t median_window_samples(double window_ms, double sample_rate_hz);

enum class DisplacementMode { centroid, nearest_point };

// Distance from the resting manifold per sample: Euclidean norm of the
// manifold-frame coordinates (centroid mode), or distance to the nearest
// manifold point projected into the same frame.
std::vector<double> displacement(const Trajectory& traj, const RestingManifold& manifold,
                                 DisplacementMode mode = DisplacementMode::centroid);

// Central differences scaled by the sample rate (one-sided at the ends);
// acceleration applies the same stencil to velocity.
Kinematics kinematics(const Trajectory& traj);

SeparationReport separation(const Trajectory& a, const Trajectory& b);

struct TrajectoryMeta {
  std::string condition;
  double sample_rate_hz = 300.0;
  double filter_window_ms = 0.0;
  std::size_t filter_window_samples = 0;
  std::string checkpoint_crc32;
  std::string displacement_mode;
};

// CSV columns t_s, x, y, z [, displacement, speed]; metadata rides in a
// `<stem>.meta.json` sidecar.
void save_trajectory(const Trajectory& traj, const std::filesystem::path& path,
                     const TrajectoryMeta& meta, const std::vector<double>* displacement_series,
                     const Kinematics* kin);
Trajectory load_trajectory(const std::filesystem::path& path);

// Orthographic xy/xz/yz projections as SVG polylines, one color per
// condition tag.
void export_svg(const std::vector<const Trajectory*>& trajectories,
                const std::filesystem::path& path);

}  // namespace psytraj::trajectory
