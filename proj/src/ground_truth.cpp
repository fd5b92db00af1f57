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

#include "earresp/ground_truth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "earresp/error.hpp"
#include "earresp/fft.hpp"

namespace earresp {

std::vector<WindowSpan> SegmentWindows(std::size_t sample_count,
                                       double sample_rate_hz, double window_s,
                                       double overlap) {
  Require(sample_rate_hz > 0.0, "sample rate must be positive");
  Require(window_s > 0.0, "window length must be positive");
  Require(overlap >= 0.0 && overlap < 1.0, "overlap must lie in [0, 1)");
  const auto length =
      static_cast<std::size_t>(std::llround(window_s * sample_rate_hz));
  const auto stride = static_cast<std::size_t>(
      std::llround(window_s * (1.0 - overlap) * sample_rate_hz));
  Require(length > 0 && stride > 0, "window or stride rounds to zero samples");

  std::vector<WindowSpan> windows;
  for (std::size_t start = 0; start + length <= sample_count;
       start += stride) {
    windows.push_back({static_cast<int>(windows.size()), start, length,
                       static_cast<double>(start) / sample_rate_hz});
  }
  return windows;
}

GroundTruth EstimateGroundTruth(std::span<const double> window,
                                double sample_rate_hz,
                                const GroundTruthConfig& config) {
  Require(config.pad_factor >= 1, "pad factor must be >= 1");
  Require(!window.empty(), "ground-truth window is empty");
  GroundTruth gt;

  double mean = 0.0;
  for (double v : window) mean += v;
  mean /= static_cast<double>(window.size());
  const std::vector<double> hamming = HammingWindow(window.size());
  std::vector<double> tapered(window.size());
  double peak_deviation = 0.0;
  for (std::size_t i = 0; i < window.size(); ++i) {
    peak_deviation = std::max(peak_deviation, std::abs(window[i] - mean));
    tapered[i] = (window[i] - mean) * hamming[i];
  }
  // Rounding residue of the mean removal on a constant window.
  if (peak_deviation <= 1e-12 * std::max(1.0, std::abs(mean))) {
    gt.reason = "no in-band spectral energy";
    return gt;
  }

  RealFft fft(window.size() * static_cast<std::size_t>(config.pad_factor));
  const auto spectrum = fft.Transform(tapered);
  const double spacing_hz = sample_rate_hz / static_cast<double>(fft.size());

  const auto lo = static_cast<std::size_t>(
      std::ceil(config.low_cpm / 60.0 / spacing_hz));
  const auto hi = std::min<std::size_t>(
      spectrum.size() - 1,
      static_cast<std::size_t>(std::floor(config.high_cpm / 60.0 / spacing_hz)));
  if (lo == 0 || lo > hi) {
    gt.reason = "validity band outside the spectrum";
    return gt;
  }

  std::vector<double> band;
  std::size_t best = lo;
  double best_mag = -1.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    const double m = std::abs(spectrum[k]);
    band.push_back(m);
    if (m > best_mag) {
      best_mag = m;
      best = k;
    }
  }
  if (!(best_mag > 0.0)) {
    gt.reason = "no in-band spectral energy";
    return gt;
  }
  const double left = std::abs(spectrum[best - 1]);
  const double right =
      best + 1 < spectrum.size() ? std::abs(spectrum[best + 1]) : 0.0;
  if (!(best_mag > left && best_mag >= right)) {
    gt.reason = "no in-band peak";
    return gt;
  }

  std::nth_element(band.begin(), band.begin() + band.size() / 2, band.end());
  const double median = band[band.size() / 2];
  gt.has_peak = true;
  gt.rate_cpm = 60.0 * static_cast<double>(best) * spacing_hz;
  gt.prominence = median > 0.0 ? best_mag / median
                               : std::numeric_limits<double>::infinity();
  GroundTruth checked[1] = {gt};
  ApplyValidity(checked, config);
  return checked[0];
}

double ApplyValidity(std::span<GroundTruth> records,
                     const GroundTruthConfig& config) {
  if (records.empty()) return 0.0;
  std::size_t excluded = 0;
  for (GroundTruth& r : records) {
    if (r.has_peak) {
      r.reason.clear();
      if (!(r.rate_cpm >= config.low_cpm && r.rate_cpm <= config.high_cpm)) {
        r.reason = "rate outside validity range";
      } else if (!(r.prominence >= config.prominence_ratio)) {
        r.reason = "no clear dominant peak";
      }
    } else if (r.reason.empty()) {
      r.reason = "no spectral peak";
    }
    r.valid = r.reason.empty();
    if (!r.valid) ++excluded;
  }
  return static_cast<double>(excluded) / static_cast<double>(records.size());
}

std::vector<GroundTruth> GroundTruthWindows(const BeltSignal& belt,
                                            const GroundTruthConfig& config) {
  ValidateBlock(belt);
  std::vector<GroundTruth> out;
  for (const WindowSpan& w : SegmentWindows(belt.size(), belt.sample_rate_hz,
                                            config.window_s, config.overlap)) {
    GroundTruth gt = EstimateGroundTruth(
        std::span<const double>(belt.samples).subspan(w.start, w.length),
        belt.sample_rate_hz, config);
    gt.window_index = w.index;
    out.push_back(std::move(gt));
  }
  return out;
}

}  // namespace earresp
