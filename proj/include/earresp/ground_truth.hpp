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

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "earresp/dsp.hpp"

namespace earresp {

// Chest-expansion signal from a respiration belt (arbitrary units).
using BeltSignal = SampleBlock;
inline constexpr double kDefaultBeltRateHz = 400.0;

struct WindowSpan {
  int index = 0;
  std::size_t start = 0;   // first sample
  std::size_t length = 0;  // samples
  double start_s = 0.0;
};

// Windows of window_s seconds every window_s * (1 - overlap) seconds, aligned
// to the first sample; a trailing partial window is dropped. Returns an empty
// list for signals shorter than one window.
std::vector<WindowSpan> SegmentWindows(std::size_t sample_count,
                                       double sample_rate_hz,
                                       double window_s = 20.0,
                                       double overlap = 0.5);

struct GroundTruthConfig {
  int pad_factor = 32;
  double low_cpm = 7.5;
  double high_cpm = 30.0;
  // Peak must exceed this multiple of the median in-band magnitude.
  double prominence_ratio = 3.0;
  double window_s = 20.0;
  double overlap = 0.5;
};

struct GroundTruth {
  int window_index = 0;
  bool has_peak = false;  // a spectral peak was found at all
  double rate_cpm = 0.0;
  double prominence = 0.0;
  bool valid = false;
  std::string reason;  // why the window is invalid
};

// Reference rate of one belt window: mean removal, Hamming window, zero-pad to
// pad_factor times the length, FFT, and the dominant local maximum inside the
// validity band. Windows without such a peak come back invalid.
GroundTruth EstimateGroundTruth(std::span<const double> window,
                                double sample_rate_hz,
                                const GroundTruthConfig& config = {});

// Re-applies the validity rule (rate in [low, high] and prominence at least
// prominence_ratio) to each record. Returns the excluded fraction.
double ApplyValidity(std::span<GroundTruth> records,
                     const GroundTruthConfig& config = {});

std::vector<GroundTruth> GroundTruthWindows(const BeltSignal& belt,
                                            const GroundTruthConfig& config = {});

}  // namespace earresp
