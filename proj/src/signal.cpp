// SPDX-License-Identifier: Apache-2.0
#include "psytraj/signal.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <set>

#include "json.hpp"
#include "psytraj/csv.hpp"
#include "psytraj/error.hpp"
#include "psytraj/rng.hpp"
#include "psytraj/util.hpp"

namespace psytraj::signal {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

ChannelKind infer_kind(std::string_view name) {
  const std::string n = lower(name);
  if (n == "a1" || n == "a2") return ChannelKind::ref;
  if (n == "ecg") return ChannelKind::ecg;
  if (n == "eda") return ChannelKind::eda;
  if (n == "rr") return ChannelKind::rr;
  return ChannelKind::eeg;
}

std::optional<std::size_t> Recording::channel_index(std::string_view name) const {
  const std::string target = lower(name);
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (lower(channels[i].name) == target) return i;
  }
  return std::nullopt;
}

void Recording::validate() const {
  if (sample_rate_hz <= 0.0) fail(errc::parameter, "recording: sample rate must be positive");
  if (channels.size() != frames.cols) {
    fail(errc::shape_mismatch, "recording: " + std::to_string(channels.size()) +
                                   " channels vs " + std::to_string(frames.cols) + " columns");
  }
  std::set<std::string> seen;
  for (const auto& ch : channels) {
    if (ch.name.empty()) fail(errc::parse, "recording: empty channel name");
    if (!seen.insert(lower(ch.name)).second) {
      fail(errc::parse, "recording: duplicate channel name '" + ch.name + "'");
    }
  }
  if (!frames.finite()) fail(errc::nonfinite, "recording: non-finite sample value");
}

std::filesystem::path sidecar_path(const std::filesystem::path& csv_path) {
  std::filesystem::path p = csv_path;
  p.replace_extension(".meta.json");
  return p;
}

Recording load_recording(const std::filesystem::path& path, std::optional<double> expected_rate) {
  csv::Table table = csv::read_table(path);

  Recording rec;
  rec.channels.reserve(table.header.size());
  for (const std::string& name : table.header) {
    rec.channels.push_back(ChannelId{name, infer_kind(name)});
  }
  rec.frames = std::move(table.values);

  double rate = 300.0;
  const std::filesystem::path meta = sidecar_path(path);
  if (std::filesystem::exists(meta)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file_text(meta));
    } catch (const nlohmann::json::exception& e) {
      fail(errc::parse, "sidecar " + meta.string() + ": " + e.what());
    }
    if (j.contains("sample_rate_hz")) rate = j["sample_rate_hz"].get<double>();
    if (j.contains("condition")) rec.condition = j["condition"].get<std::string>();
  }
  if (expected_rate) rate = *expected_rate;
  rec.sample_rate_hz = rate;
  rec.validate();
  return rec;
}

void save_recording(const Recording& rec, const std::filesystem::path& path) {
  rec.validate();
  std::vector<std::string> header;
  header.reserve(rec.channels.size());
  for (const auto& ch : rec.channels) header.push_back(ch.name);
  csv::write_table(path, header, rec.frames);

  nlohmann::json meta = {
      {"sample_rate_hz", rec.sample_rate_hz},
      {"condition", rec.condition},
  };
  write_file_text(sidecar_path(path), meta.dump(2) + "\n");
}

NormalizationStats compute_stats(const Recording& rec) {
  if (rec.frame_count() < 2) {
    fail(errc::insufficient_data,
         "compute_stats: need at least 2 frames, got " + std::to_string(rec.frame_count()));
  }
  const std::size_t n = rec.frame_count();
  const std::size_t c = rec.channel_count();
  NormalizationStats stats;
  stats.mean.assign(c, 0.0);
  stats.stddev.assign(c, 0.0);
  stats.degenerate.assign(c, 0);

  for (std::size_t r = 0; r < n; ++r) {
    const double* row = rec.frames.row(r);
    for (std::size_t j = 0; j < c; ++j) stats.mean[j] += row[j];
  }
  for (std::size_t j = 0; j < c; ++j) stats.mean[j] /= static_cast<double>(n);

  for (std::size_t r = 0; r < n; ++r) {
    const double* row = rec.frames.row(r);
    for (std::size_t j = 0; j < c; ++j) {
      const double d = row[j] - stats.mean[j];
      stats.stddev[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < c; ++j) {
    stats.stddev[j] = std::sqrt(stats.stddev[j] / static_cast<double>(n));
    if (stats.stddev[j] < 1e-12) {
      stats.stddev[j] = 1.0;
      stats.degenerate[j] = 1;
    }
  }
  return stats;
}

namespace {

Recording apply_affine(const Recording& rec, const NormalizationStats& stats, bool forward) {
  if (stats.channel_count() != rec.channel_count()) {
    fail(errc::shape_mismatch, "normalize: stats cover " + std::to_string(stats.channel_count()) +
                                   " channels, recording has " + std::to_string(rec.channel_count()));
  }
  Recording out = rec;
  for (std::size_t r = 0; r < out.frames.rows; ++r) {
    double* row = out.frames.row(r);
    for (std::size_t j = 0; j < out.frames.cols; ++j) {
      row[j] = forward ? (row[j] - stats.mean[j]) / stats.stddev[j]
                       : row[j] * stats.stddev[j] + stats.mean[j];
    }
  }
  out.normalized = forward;
  return out;
}

}  // namespace

Recording normalize(const Recording& rec, const NormalizationStats& stats) {
  return apply_affine(rec, stats, true);
}

Recording denormalize(const Recording& rec, const NormalizationStats& stats) {
  return apply_affine(rec, stats, false);
}

Recording common_mode_pattern(const Recording& rec, std::size_t length_frames) {
  if (length_frames == 0) fail(errc::parameter, "common_mode_pattern: length must be positive");
  const auto a1 = rec.channel_index("A1");
  const auto a2 = rec.channel_index("A2");
  if (!a1 || !a2) {
    fail(errc::missing_channel, "common_mode_pattern: recording lacks reference channels A1/A2");
  }
  const std::size_t n = rec.frame_count();
  if (n == 0) fail(errc::empty_input, "common_mode_pattern: empty recording");

  // Tiled sequence: all of A1, then all of A2, cycled.
  std::vector<double> seq(2 * n);
  for (std::size_t r = 0; r < n; ++r) {
    seq[r] = rec.frames.at(r, *a1);
    seq[n + r] = rec.frames.at(r, *a2);
  }

  Recording out;
  out.sample_rate_hz = rec.sample_rate_hz;
  out.channels = rec.channels;
  out.condition = rec.condition;
  out.normalized = rec.normalized;
  out.frames = linalg::Matrix(length_frames, rec.channel_count());
  for (std::size_t r = 0; r < length_frames; ++r) {
    const double value = seq[r % seq.size()];
    double* row = out.frames.row(r);
    for (std::size_t j = 0; j < out.frames.cols; ++j) row[j] = value;
  }
  return out;
}

SynthSpec SynthSpec::from_json_text(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse, std::string("synthesis spec: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.sample_rate_hz = j.value("sample_rate_hz", 300.0);
    spec.duration_s = j.at("duration_s").get<double>();
    spec.noise_amplitude = j.value("noise_amplitude", 0.0);
    spec.condition = j.value("condition", std::string{});
    for (const auto& jc : j.at("channels")) {
      ChannelSynthSpec ch;
      ch.name = jc.at("name").get<std::string>();
      if (jc.contains("sinusoids")) {
        for (const auto& js : jc["sinusoids"]) {
          Sinusoid s;
          s.freq_hz = js.at("freq_hz").get<double>();
          s.amplitude = js.at("amplitude").get<double>();
          s.phase_rad = js.value("phase_rad", 0.0);
          ch.sinusoids.push_back(s);
        }
      }
      spec.channels.push_back(std::move(ch));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(errc::parse, std::string("synthesis spec: ") + e.what());
  }
  return spec;
}

std::string SynthSpec::to_json_text() const {
  nlohmann::json j;
  j["sample_rate_hz"] = sample_rate_hz;
  j["duration_s"] = duration_s;
  j["noise_amplitude"] = noise_amplitude;
  j["condition"] = condition;
  j["channels"] = nlohmann::json::array();
  for (const auto& ch : channels) {
    nlohmann::json jc;
    jc["name"] = ch.name;
    jc["sinusoids"] = nlohmann::json::array();
    for (const auto& s : ch.sinusoids) {
      jc["sinusoids"].push_back(
          {{"freq_hz", s.freq_hz}, {"amplitude", s.amplitude}, {"phase_rad", s.phase_rad}});
    }
    j["channels"].push_back(std::move(jc));
  }
  return j.dump(2) + "\n";
}

Recording synthesize(const SynthSpec& spec, uint64_t seed) {
  if (spec.duration_s <= 0.0) fail(errc::parameter, "synthesize: duration must be positive");
  if (spec.sample_rate_hz <= 0.0) fail(errc::parameter, "synthesize: sample rate must be positive");
  if (spec.channels.empty()) fail(errc::parameter, "synthesize: no channels");
  if (spec.noise_amplitude < 0.0) fail(errc::parameter, "synthesize: negative noise amplitude");

  const auto frames =
      static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate_hz));
  if (frames == 0) fail(errc::parameter, "synthesize: duration shorter than one sample");

  Recording rec;
  rec.sample_rate_hz = spec.sample_rate_hz;
  rec.condition = spec.condition;
  rec.frames = linalg::Matrix(frames, spec.channels.size());
  for (const auto& ch : spec.channels) {
    rec.channels.push_back(ChannelId{ch.name, infer_kind(ch.name)});
  }

  const uint64_t tag_hash = spec.condition.empty() ? 0 : hash_str(spec.condition);
  Rng noise(hash_combine(seed, 0x73796e7468ULL));  // "synth"

  for (std::size_t c = 0; c < spec.channels.size(); ++c) {
    const auto& ch = spec.channels[c];
    // Condition tag rescales each sinusoid amplitude deterministically.
    std::vector<double> amp(ch.sinusoids.size());
    for (std::size_t k = 0; k < ch.sinusoids.size(); ++k) {
      amp[k] = ch.sinusoids[k].amplitude;
      if (tag_hash != 0) {
        const uint64_t h = splitmix64(hash_combine(tag_hash, hash_combine(hash_str(ch.name), k)));
        const double u = static_cast<double>(h >> 11) * 0x1.0p-53;  // [0, 1)
        amp[k] *= 0.5 + u;
      }
    }
    for (std::size_t r = 0; r < frames; ++r) {
      const double t = static_cast<double>(r) / spec.sample_rate_hz;
      double value = 0.0;
      for (std::size_t k = 0; k < ch.sinusoids.size(); ++k) {
        const auto& s = ch.sinusoids[k];
        value += amp[k] * std::sin(2.0 * std::numbers::pi * s.freq_hz * t + s.phase_rad);
      }
      rec.frames.at(r, c) = value;
    }
  }
  if (spec.noise_amplitude > 0.0) {
    for (std::size_t r = 0; r < frames; ++r) {
      double* row = rec.frames.row(r);
      for (std::size_t c = 0; c < rec.frames.cols; ++c) {
        row[c] += spec.noise_amplitude * noise.gaussian();
      }
    }
  }
  rec.validate();
  return rec;
}

}  // namespace psytraj::signal
