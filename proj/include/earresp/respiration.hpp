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

// One-sided STFT magnitudes |Y(t, f)|, stored frame-major.
struct Spectrogram {
  std::vector<double> magnitudes;  // frame_count() x bins
  std::size_t bin_count = 0;
  double frame_rate_hz = 0.0;
  double bin_spacing_hz = 0.0;
  int window_size = 0;
  int hop = 0;

  std::size_t frame_count() const {
    return bin_count == 0 ? 0 : magnitudes.size() / bin_count;
  }
  std::span<const double> frame(std::size_t t) const {
    return {magnitudes.data() + t * bin_count, bin_count};
  }
  // Copy of frames [first, first + count).
  Spectrogram Slice(std::size_t first, std::size_t count) const;
};

// Hamming-windowed STFT. Frame t covers samples [t*hop, t*hop + window_size);
// window_size/2 + 1 bins per frame.
Spectrogram Stft(const SampleBlock& signal, int window_size, int hop);

struct FeatureSeries {
  std::vector<double> values;
  double rate_hz = 0.0;
};

// Floor applied inside the logarithms of the energy and dissimilarity
// features, so silent frames stay finite.
inline constexpr double kLogFloor = 1e-12;

// p(t) = (1/F) log(max(sum_f |Y(t,f)|^2, floor)), F = bins per frame.
FeatureSeries LogSpectralEnergy(const Spectrogram& spec,
                                double floor = kLogFloor);

// Order statistic at 0-based rank ceil(q (N - 1)) of the values.
double EmpiricalQuantile(std::span<const double> values, double q);

// Indices t with p(t) >= the empirical q-quantile. Never empty for a
// non-empty input.
std::vector<std::size_t> QuantileMask(std::span<const double> p,
                                      double q = 0.85);

// (sum_f |x_f|^p)^(1/p)
double PNorm(std::span<const double> x, double p);

// Mean over masked frames of Y(t, .)/||Y(t, .)||_p. Frames with zero norm are
// skipped; if every masked frame is zero a degenerate-window error is thrown.
std::vector<double> AverageBreathSpectrum(const Spectrogram& spec,
                                          std::span<const std::size_t> mask,
                                          double p_norm = 8.0);

// d(t) = (1/F) log(max(sum_f (Y(t,f)/||Y(t,.)||_p - avg(f))^2, floor)).
FeatureSeries SpectralDissimilarity(const Spectrogram& spec,
                                    std::span<const double> average,
                                    double p_norm = 8.0,
                                    double floor = kLogFloor);

// c(t) = a_p p(t)/||p||_2 - a_d d(t)/||d||_2.
FeatureSeries CombineFeatures(const FeatureSeries& energy,
                              const FeatureSeries& dissimilarity,
                              double a_p = 0.5, double a_d = 0.5);

struct FeaturePrepConfig {
  double low_hz = 0.05;
  double high_hz = 1.9;
  int decimation = 32;
};

// Mean removal, respiration-band filtering (2nd-order Butterworth high-pass
// and low-pass) from rest, decimation by keeping every Nth sample, then a
// second mean removal.
FeatureSeries PrepareFeature(const FeatureSeries& combined,
                             const FeaturePrepConfig& config = {});

enum class Channel { kLeft, kRight, kFused };
const char* ChannelName(Channel channel);

struct RrEstimate {
  double rate_cpm = 0.0;
  Channel channel = Channel::kLeft;
  int window_index = 0;
  double peak_magnitude = 0.0;
};

struct EstimatorConfig {
  double search_low_cpm = 7.5;
  double search_high_cpm = 30.0;
  // Zero-padded length is the next power of two >= pad_multiple * length.
  int pad_multiple = 32;
  std::size_t min_length = 16;
  // A candidate f must have |C(f)| at least this fraction of the largest
  // in-band |C|. For a single tone C*(f0/2) and C*(f0) tie up to sidelobe
  // leakage; this keeps bins with no energy of their own from winning.
  double min_fundamental_ratio = 0.1;
};

// Harmonic spectrum C*(k) = |C(k)| + |C(2k)| of a Hamming-windowed,
// zero-padded series, for k with 2k inside the one-sided spectrum.
struct HarmonicSpectrum {
  std::vector<double> magnitude;  // |C(k)|, all one-sided bins
  std::vector<double> harmonic;   // C*(k)
  double bin_spacing_hz = 0.0;
};
HarmonicSpectrum ComputeHarmonicSpectrum(std::span<const double> series,
                                         double rate_hz, int pad_multiple);

// Argmax of C*(f) over the search-band bins that pass the
// min_fundamental_ratio test (lowest frequency wins exact ties), then moved
// uphill on |C(f)| to the local maximum it sits on. Throws insufficient-data for short series and degenerate-window when
// the band holds no energy.
RrEstimate EstimateRr(std::span<const double> series, double rate_hz,
                      const EstimatorConfig& config = {});

struct RrConfig {
  double stft_rate_hz = 2000.0;
  int window_size = 128;
  int hop = 16;
  double quantile = 0.85;
  double p_norm = 8.0;
  double a_p = 0.5;
  double a_d = 0.5;
  FeaturePrepConfig prep;
  EstimatorConfig estimator;
  double window_s = 20.0;
  double overlap = 0.5;

  void Validate() const;
};

// Per-window outcome of the estimator on one channel.
struct WindowEstimate {
  int window_index = 0;
  double start_s = 0.0;
  bool valid = false;
  RrEstimate estimate;
  std::string failure;  // set when !valid
};

// Full estimator: resamples to stft_rate_hz when needed (integer factor),
// computes the STFT once and runs the per-window feature chain. Throws
// insufficient-data when the audio is shorter than one analysis window.
std::vector<WindowEstimate> EstimateWindows(const SampleBlock& audio,
                                            const RrConfig& config,
                                            Channel channel);

// Samples of audio at `sample_rate_hz` needed for one analysis window.
std::size_t MinimumSamples(const RrConfig& config, double sample_rate_hz);

}  // namespace earresp
