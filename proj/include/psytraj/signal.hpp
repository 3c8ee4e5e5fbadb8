// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "psytraj/linalg.hpp"

namespace psytraj::signal {

enum class ChannelKind { eeg, ecg, eda, rr, ref };

struct ChannelId {
  std::string name;
  ChannelKind kind = ChannelKind::eeg;
};

// A1/A2 -> ref, ECG/EDA/RR by name (case-insensitive), everything else EEG.
ChannelKind infer_kind(std::string_view name);

// Rectangular multichannel time series: one row per sample, one column per
// channel. Values are raw sensor units until normalize() stamps the
// recording as z-scored.
struct Recording {
  double sample_rate_hz = 300.0;
  std::vector<ChannelId> channels;
  linalg::Matrix frames;
  std::string condition;    // task condition tag ("" when unset)
  bool normalized = false;  // in-process sentinel set by normalize()

  std::size_t frame_count() const { return frames.rows; }
  std::size_t channel_count() const { return channels.size(); }
  double duration_s() const { return static_cast<double>(frames.rows) / sample_rate_hz; }
  std::optional<std::size_t> channel_index(std::string_view name) const;
  void validate() const;
};

struct NormalizationStats {
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<uint8_t> degenerate;  // flat channels whose std was replaced by 1.0

  std::size_t channel_count() const { return mean.size(); }
};

// CSV with a header row of channel names; sample rate and condition tag ride
// in a `<stem>.meta.json` sidecar. `expected_rate` (the CLI flag) wins over
// the sidecar; the default is 300 Hz.
Recording load_recording(const std::filesystem::path& path,
                         std::optional<double> expected_rate = std::nullopt);
void save_recording(const Recording& rec, const std::filesystem::path& path);

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path);

// Per-channel mean and population standard deviation. Channels with
// std < 1e-12 are flagged degenerate and get std = 1.0 so flat reference
// channels stay trainable.
NormalizationStats compute_stats(const Recording& rec);

Recording normalize(const Recording& rec, const NormalizationStats& stats);
Recording denormalize(const Recording& rec, const NormalizationStats& stats);

// The SNR-floor source: every channel carries the same tiled [A1 samples,
// A2 samples] sequence, so each output row is constant across channels
// (zero differential signal).
Recording common_mode_pattern(const Recording& rec, std::size_t length_frames);

struct Sinusoid {
  double freq_hz = 0.0;
  double amplitude = 0.0;
  double phase_rad = 0.0;
};

struct ChannelSynthSpec {
  std::string name;
  std::vector<Sinusoid> sinusoids;
};

struct SynthSpec {
  double sample_rate_hz = 300.0;
  double duration_s = 0.0;
  double noise_amplitude = 0.0;
  std::string condition;
  std::vector<ChannelSynthSpec> channels;

  static SynthSpec from_json_text(const std::string& text);
  std::string to_json_text() const;
};

// Deterministic in (spec, seed). Each channel is its sinusoid sum plus
// seeded Gaussian noise. A nonempty condition tag rescales every sinusoid
// amplitude by a tag-derived factor in [0.5, 1.5), so two tags give
// linearly distinguishable band power; an empty tag leaves amplitudes
// untouched.
Recording synthesize(const SynthSpec& spec, uint64_t seed);

}  // namespace psytraj::signal
