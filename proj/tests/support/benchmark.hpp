// SPDX-License-Identifier: Apache-2.0
//
// Seeded rank-3 benchmark recordings: 22 signal channels mixing three shared
// sinusoid sources (common phases, so the signal block has rank exactly 3),
// plus A1/A2 reference channels. With independent_reference the references
// carry their own sinusoid, which makes the best rank-3 linear
// reconstruction error strictly positive; without it they are source
// mixtures too and the noiseless data is exactly rank 3.
#pragma once

#include <cstdint>
#include <string>

#include "psytraj/signal.hpp"

namespace psytraj::bench {

struct Options {
  double duration_s = 60.0;
  double sample_rate_hz = 300.0;
  double noise_amplitude = 0.0;
  std::string condition = "rest";
  bool independent_reference = true;
  bool dc_offsets = true;  // per-channel 0 Hz component (tag-sensitive baseline shifts)
};

signal::SynthSpec rank3_spec(uint64_t seed, const Options& opt = {});

inline signal::Recording rank3_recording(uint64_t seed, const Options& opt = {}) {
  return signal::synthesize(rank3_spec(seed, opt), seed);
}

}  // namespace psytraj::bench
