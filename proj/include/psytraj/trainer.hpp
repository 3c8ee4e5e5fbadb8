// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "psytraj/nn.hpp"
#include "psytraj/ortho.hpp"
#include "psytraj/signal.hpp"

namespace psytraj::trainer {

struct TrainConfig {
  std::size_t max_epochs = 200;
  std::size_t batch_size = 64;
  double lr = 1e-3;
  double momentum = 0.9;
  ortho::OrthoConfig ortho;  // tolerance, penalty weight lambda, per-epoch orthonormalization
  uint64_t seed = 0;
  bool snr_floor_epoch = true;
  std::size_t latent_dim = 3;
  unsigned threads = 0;  // gradient fan-out workers; 0 = hardware concurrency, 1 = sequential

  void validate() const;
  static TrainConfig from_json_text(const std::string& text);
  std::string to_json_text() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  bool curriculum = false;  // the SNR-floor pass on common-mode data
  double mse = 0.0;         // full-dataset reconstruction MSE after the epoch
  double penalty = 0.0;
  double max_angle_deviation_deg = 0.0;
  std::vector<double> angles_deg;
  bool orthonormalized = false;
  double wall_ms = 0.0;  // not persisted in checkpoints (kept out of hashed content)
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

struct TrainedModel {
  nn::NetworkSpec spec;
  nn::Weights weights;
  signal::NormalizationStats stats;
  TrainConfig config;
  TrainHistory history;
  bool converged = false;
};

// Epoch data source. Epoch 0 under the SNR-floor curriculum is the tiled
// common-mode pattern in natural order; every other epoch is the real data
// under a seeded per-epoch row shuffle.
class Curriculum {
 public:
  Curriculum(const signal::Recording& normalized, bool snr_floor, uint64_t seed);

  std::size_t frames() const { return real_.rows; }
  std::size_t channels() const { return real_.cols; }
  bool is_curriculum_epoch(std::size_t epoch) const { return snr_floor_ && epoch == 0; }
  void materialize_epoch(std::size_t epoch, linalg::Matrix& out) const;
  const linalg::Matrix& real_frames() const { return real_; }

 private:
  linalg::Matrix real_;
  linalg::Matrix pattern_;
  bool snr_floor_ = false;
  uint64_t seed_ = 0;
};

Curriculum build_curriculum(const signal::Recording& normalized, const TrainConfig& cfg);

// Full training run: SNR-floor curriculum, minibatch SGD on MSE + lambda*P,
// per-epoch orthonormalization, early stop once the full-dataset angle
// report converges on a non-curriculum epoch. Deterministic for fixed
// (recording, config, worker count).
TrainedModel train(const signal::Recording& rec, const TrainConfig& cfg);

// Checkpoint container: "LTAE" magic, u32 format version, JSON block for
// network/config/stats/history, raw little-endian f64 weights in ladder order,
// trailing CRC32.
void save_checkpoint(const TrainedModel& model, const std::filesystem::path& path);
TrainedModel load_checkpoint(const std::filesystem::path& path);

// CRC stored in a checkpoint's trailer (verifies integrity first); used as a
// provenance hash in derived artifacts.
uint32_t checkpoint_crc(const std::filesystem::path& path);

// JSON-lines training log, one object per epoch (includes wall_ms).
void write_train_log(const TrainHistory& history, bool converged,
                     const std::filesystem::path& path);

}  // namespace psytraj::trainer
