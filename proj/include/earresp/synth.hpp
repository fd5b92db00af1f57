// Copyright 2026 The earresp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "earresp/dsp.hpp"
#include "earresp/ground_truth.hpp"

namespace earresp {

enum class NoiseKind {
  kWhite,
  kBandLimited,
  kAmplitudeModulated,  // cafeteria-like
  kTonalMixture,        // music-like
};

const char* NoiseKindName(NoiseKind kind);
NoiseKind ParseNoiseKind(const std::string& name);

struct BreathingSignal {
  SampleBlock audio;             // band-limited breath bursts
  std::vector<double> envelope;  // exact burst gain per audio sample
  BeltSignal belt;               // chest expansion at the belt rate
  std::vector<double> burst_centers_s;
};

// Breath audio at the respiration rate. Each cycle of period T starts with a
// 0.1 s lead, an inspiration burst (0.8 s, gain 1.0), a 0.5 s pause and
// an expiration burst (1.0 s, gain 0.7); the rest of the cycle is the
// expiratory pause. Durations are for 15 CPM and scale with 15/rate. Bursts
// are Hann-shaped 200-1000 Hz noise. The belt is a sinusoid peaking at the
// end of inspiration.
BreathingSignal GenerateBreathing(double rate_cpm, double duration_s,
                                  double fs_hz, std::uint64_t seed,
                                  double belt_rate_hz = kDefaultBeltRateHz);

// Random decaying FIR path with unit L2 norm.
std::vector<double> RandomPath(int taps, std::uint64_t seed);

// Energy of x inside [low_hz, high_hz] measured on its DFT (brick-wall).
double InBandEnergy(std::span<const double> x, double fs_hz, double low_hz,
                    double high_hz);

struct SynthScenario {
  double breath_rate_cpm = 15.0;
  double duration_s = 60.0;
  double fs_hz = 8000.0;
  NoiseKind noise_kind = NoiseKind::kWhite;
  // In-band (200-1000 Hz) breath-to-IEM-noise energy ratio; +inf: no noise.
  double snr_db = -10.0;
  // Primary path OEM -> IEM. Empty: a random 128-tap path from the seed.
  std::vector<double> path_taps;
  std::uint64_t seed = 1;
  double belt_rate_hz = kDefaultBeltRateHz;
  double window_s = 20.0;
  double overlap = 0.5;

  void Validate() const;
};

struct ScenarioSignals {
  SampleBlock iem;           // clean_breath + path * oem
  SampleBlock oem;           // ambient noise reference
  SampleBlock clean_breath;  // oracle breath component of the IEM
  SampleBlock iem_noise;     // oracle noise component of the IEM
  BeltSignal belt;
  std::vector<double> path_taps;
  std::vector<double> truth_cpm;  // one entry per analysis window
  double noise_gain = 0.0;        // scale applied to the unit-RMS noise
};

ScenarioSignals GenerateScenario(const SynthScenario& scenario);

}  // namespace earresp
