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

#include "earresp/respiration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <numeric>

#include "earresp/error.hpp"
#include "earresp/fft.hpp"
#include "earresp/ground_truth.hpp"

namespace earresp {

namespace {

double L2Norm(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v * v;
  return std::sqrt(sum);
}

void RemoveMean(std::vector<double>& x) {
  if (x.empty()) return;
  const double mean =
      std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  for (double& v : x) v -= mean;
}

std::string SecondsText(double s) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", s);
  return buf;
}

}  // namespace

Spectrogram Spectrogram::Slice(std::size_t first, std::size_t count) const {
  Require(first + count <= frame_count(), "spectrogram slice out of range");
  Spectrogram out = *this;
  out.magnitudes.assign(magnitudes.begin() + first * bin_count,
                        magnitudes.begin() + (first + count) * bin_count);
  return out;
}

Spectrogram Stft(const SampleBlock& signal, int window_size, int hop) {
  Require(window_size >= 2, "STFT window must be at least 2 samples");
  Require(hop >= 1, "STFT hop must be positive");
  Require(signal.sample_rate_hz > 0.0, "sample rate must be positive");
  const auto w = static_cast<std::size_t>(window_size);
  if (signal.size() < w) {
    Fail(ErrorCode::kInsufficientData,
         "signal shorter than one STFT window (" + std::to_string(w) +
             " samples)");
  }

  Spectrogram spec;
  spec.window_size = window_size;
  spec.hop = hop;
  spec.bin_count = w / 2 + 1;
  spec.frame_rate_hz = signal.sample_rate_hz / hop;
  spec.bin_spacing_hz = signal.sample_rate_hz / window_size;

  const std::size_t frames = (signal.size() - w) / hop + 1;
  spec.magnitudes.resize(frames * spec.bin_count);
  const std::vector<double> hamming = HammingWindow(w);
  std::vector<double> frame(w);
  RealFft fft(w);
  for (std::size_t t = 0; t < frames; ++t) {
    const double* src = signal.samples.data() + t * hop;
    for (std::size_t i = 0; i < w; ++i) frame[i] = src[i] * hamming[i];
    const auto bins = fft.Transform(frame);
    double* dst = spec.magnitudes.data() + t * spec.bin_count;
    for (std::size_t k = 0; k < spec.bin_count; ++k) dst[k] = std::abs(bins[k]);
  }
  return spec;
}

FeatureSeries LogSpectralEnergy(const Spectrogram& spec, double floor) {
  Require(spec.frame_count() > 0, "spectrogram has no frames");
  FeatureSeries p;
  p.rate_hz = spec.frame_rate_hz;
  p.values.resize(spec.frame_count());
  const double scale = 1.0 / static_cast<double>(spec.bin_count);
  for (std::size_t t = 0; t < p.values.size(); ++t) {
    double energy = 0.0;
    for (double m : spec.frame(t)) energy += m * m;
    p.values[t] = scale * std::log(std::max(energy, floor));
  }
  return p;
}

double EmpiricalQuantile(std::span<const double> values, double q) {
  Require(!values.empty(), "quantile of an empty series");
  Require(q > 0.0 && q < 1.0, "quantile level must lie in (0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  const auto rank = std::min(
      sorted.size() - 1,
      static_cast<std::size_t>(
          std::ceil(q * static_cast<double>(sorted.size() - 1))));
  std::nth_element(sorted.begin(), sorted.begin() + rank, sorted.end());
  return sorted[rank];
}

std::vector<std::size_t> QuantileMask(std::span<const double> p, double q) {
  const double threshold = EmpiricalQuantile(p, q);
  std::vector<std::size_t> mask;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (p[t] >= threshold) mask.push_back(t);
  }
  return mask;
}

double PNorm(std::span<const double> x, double p) {
  Require(p >= 1.0, "p-norm order must be >= 1");
  // Scale by the max magnitude so x^8 neither overflows nor underflows.
  double peak = 0.0;
  for (double v : x) peak = std::max(peak, std::abs(v));
  if (peak == 0.0) return 0.0;
  double sum = 0.0;
  for (double v : x) sum += std::pow(std::abs(v) / peak, p);
  return peak * std::pow(sum, 1.0 / p);
}

std::vector<double> AverageBreathSpectrum(const Spectrogram& spec,
                                          std::span<const std::size_t> mask,
                                          double p_norm) {
  Require(!mask.empty(), "breath-spectrum mask is empty");
  std::vector<double> average(spec.bin_count, 0.0);
  std::size_t used = 0;
  for (std::size_t t : mask) {
    Require(t < spec.frame_count(), "mask index out of range");
    const auto frame = spec.frame(t);
    const double norm = PNorm(frame, p_norm);
    if (norm == 0.0) continue;
    for (std::size_t f = 0; f < spec.bin_count; ++f) {
      average[f] += frame[f] / norm;
    }
    ++used;
  }
  if (used == 0) {
    Fail(ErrorCode::kDegenerate, "every masked frame has zero norm");
  }
  for (double& v : average) v /= static_cast<double>(used);
  return average;
}

FeatureSeries SpectralDissimilarity(const Spectrogram& spec,
                                    std::span<const double> average,
                                    double p_norm, double floor) {
  Require(average.size() == spec.bin_count,
          "average spectrum length does not match the bin count");
  FeatureSeries d;
  d.rate_hz = spec.frame_rate_hz;
  d.values.resize(spec.frame_count());
  const double scale = 1.0 / static_cast<double>(spec.bin_count);
  for (std::size_t t = 0; t < d.values.size(); ++t) {
    const auto frame = spec.frame(t);
    const double norm = PNorm(frame, p_norm);
    double sum = 0.0;
    for (std::size_t f = 0; f < spec.bin_count; ++f) {
      // Divide rather than multiply by 1/norm: a subnormal norm would overflow.
      const double unit = norm > 0.0 ? frame[f] / norm : 0.0;
      const double diff = unit - average[f];
      sum += diff * diff;
    }
    d.values[t] = scale * std::log(std::max(sum, floor));
  }
  return d;
}

FeatureSeries CombineFeatures(const FeatureSeries& energy,
                              const FeatureSeries& dissimilarity, double a_p,
                              double a_d) {
  Require(energy.values.size() == dissimilarity.values.size(),
          "feature series lengths differ");
  const double np = L2Norm(energy.values);
  const double nd = L2Norm(dissimilarity.values);
  if (!(np > 0.0) || !(nd > 0.0)) {
    Fail(ErrorCode::kDegenerate, "feature series has zero L2 norm");
  }
  FeatureSeries c;
  c.rate_hz = energy.rate_hz;
  c.values.resize(energy.values.size());
  for (std::size_t t = 0; t < c.values.size(); ++t) {
    c.values[t] = a_p * energy.values[t] / np - a_d * dissimilarity.values[t] / nd;
  }
  return c;
}

FeatureSeries PrepareFeature(const FeatureSeries& combined,
                             const FeaturePrepConfig& config) {
  Require(config.decimation >= 1, "feature decimation must be >= 1");
  std::vector<double> x = combined.values;
  RemoveMean(x);
  BiquadCascade highpass = DesignHighpass(config.low_hz, combined.rate_hz, 2);
  BiquadCascade lowpass = DesignLowpass(config.high_hz, combined.rate_hz, 2);

  FeatureSeries out;
  out.rate_hz = combined.rate_hz / config.decimation;
  out.values.reserve(x.size() / config.decimation + 1);
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double y = lowpass.Process(highpass.Process(x[t]));
    if (t % config.decimation == 0) out.values.push_back(y);
  }
  RemoveMean(out.values);
  return out;
}

const char* ChannelName(Channel channel) {
  switch (channel) {
    case Channel::kLeft:
      return "left";
    case Channel::kRight:
      return "right";
    case Channel::kFused:
      return "fused";
  }
  return "unknown";
}

HarmonicSpectrum ComputeHarmonicSpectrum(std::span<const double> series,
                                         double rate_hz, int pad_multiple) {
  Require(pad_multiple >= 1, "pad multiple must be >= 1");
  const std::vector<double> hamming = HammingWindow(series.size());
  std::vector<double> tapered(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    tapered[i] = series[i] * hamming[i];
  }
  RealFft fft(NextPowerOfTwo(series.size() * pad_multiple));
  const auto bins = fft.Transform(tapered);

  HarmonicSpectrum hs;
  hs.bin_spacing_hz = rate_hz / static_cast<double>(fft.size());
  hs.magnitude.resize(bins.size());
  for (std::size_t k = 0; k < bins.size(); ++k) {
    hs.magnitude[k] = std::abs(bins[k]);
  }
  const std::size_t half = (bins.size() + 1) / 2;  // 2k stays in range
  hs.harmonic.resize(half);
  for (std::size_t k = 0; k < half; ++k) {
    hs.harmonic[k] = hs.magnitude[k] + hs.magnitude[2 * k];
  }
  return hs;
}

RrEstimate EstimateRr(std::span<const double> series, double rate_hz,
                      const EstimatorConfig& config) {
  Require(rate_hz > 0.0, "feature rate must be positive");
  Require(config.min_fundamental_ratio >= 0.0 &&
              config.min_fundamental_ratio <= 1.0,
          "min_fundamental_ratio must lie in [0, 1]");
  Require(config.search_low_cpm > 0.0 &&
              config.search_low_cpm < config.search_high_cpm,
          "search band must satisfy 0 < low < high");
  if (series.size() < config.min_length) {
    Fail(ErrorCode::kInsufficientData,
         "feature window has " + std::to_string(series.size()) +
             " samples, at least " + std::to_string(config.min_length) +
             " required");
  }
  const HarmonicSpectrum hs =
      ComputeHarmonicSpectrum(series, rate_hz, config.pad_multiple);
  const double spacing_cpm = 60.0 * hs.bin_spacing_hz;
  const auto lo = static_cast<std::size_t>(
      std::ceil(config.search_low_cpm / spacing_cpm));
  const auto hi = std::min<std::size_t>(
      hs.harmonic.size() - 1,
      static_cast<std::size_t>(std::floor(config.search_high_cpm / spacing_cpm)));
  if (lo > hi) {
    Fail(ErrorCode::kParameter,
         "search band lies outside the harmonic spectrum range");
  }
  double band_peak = 0.0;
  for (std::size_t k = lo; k <= hi; ++k) {
    band_peak = std::max(band_peak, hs.magnitude[k]);
  }
  const double floor = config.min_fundamental_ratio * band_peak;
  std::size_t best = lo;
  bool found = false;
  for (std::size_t k = lo; k <= hi; ++k) {
    if (hs.magnitude[k] < floor) continue;
    if (!found || hs.harmonic[k] > hs.harmonic[best]) best = k;
    found = true;
  }
  // C* picks the peak; |C| places it. The |C(2f)| term is usually sloped
  // near the chosen bin and would otherwise pull the estimate off the peak.
  while (best < hi && hs.magnitude[best + 1] > hs.magnitude[best]) ++best;
  while (best > lo && hs.magnitude[best - 1] > hs.magnitude[best]) --best;
  double total = 0.0;
  for (double m : hs.magnitude) total += m;
  if (!(hs.harmonic[best] > 1e-12 * std::max(total, 1e-300)) ||
      !(total > 0.0)) {
    Fail(ErrorCode::kDegenerate, "feature window carries no spectral energy");
  }
  RrEstimate est;
  est.rate_cpm = spacing_cpm * static_cast<double>(best);
  est.peak_magnitude = hs.harmonic[best];
  return est;
}

void RrConfig::Validate() const {
  Require(stft_rate_hz > 0.0, "STFT rate must be positive");
  Require(window_size >= 2 && hop >= 1, "invalid STFT window/hop");
  Require(quantile > 0.0 && quantile < 1.0, "quantile must lie in (0, 1)");
  Require(p_norm >= 1.0, "p-norm order must be >= 1");
  Require(window_s > 0.0 && overlap >= 0.0 && overlap < 1.0,
          "invalid analysis window");
  Require(prep.decimation >= 1, "feature decimation must be >= 1");
}

std::size_t MinimumSamples(const RrConfig& config, double sample_rate_hz) {
  return static_cast<std::size_t>(
      std::ceil(config.window_s * sample_rate_hz - 1e-9));
}

std::vector<WindowEstimate> EstimateWindows(const SampleBlock& audio,
                                            const RrConfig& config,
                                            Channel channel) {
  config.Validate();
  Require(audio.sample_rate_hz > 0.0, "sample rate must be positive");
  const std::size_t minimum = MinimumSamples(config, audio.sample_rate_hz);
  if (audio.size() < minimum) {
    Fail(ErrorCode::kInsufficientData,
         "audio has " + std::to_string(audio.size()) +
             " samples; one analysis window needs at least " +
             std::to_string(minimum) + " samples (" +
             SecondsText(config.window_s) + " s)");
  }

  SampleBlock resampled;
  const SampleBlock* stft_input = &audio;
  if (audio.sample_rate_hz != config.stft_rate_hz) {
    const double ratio = audio.sample_rate_hz / config.stft_rate_hz;
    const auto factor = static_cast<int>(std::llround(ratio));
    Require(factor >= 1 && std::abs(ratio - factor) < 1e-9,
            "audio rate must be an integer multiple of the STFT rate");
    resampled = Decimate(audio, factor);
    stft_input = &resampled;
  }

  const double fs = stft_input->sample_rate_hz;
  const auto windows =
      SegmentWindows(stft_input->size(), fs, config.window_s, config.overlap);
  if (windows.empty()) {
    Fail(ErrorCode::kInsufficientData,
         "audio shorter than one analysis window");
  }
  const Spectrogram spec = Stft(*stft_input, config.window_size, config.hop);
  const FeatureSeries energy = LogSpectralEnergy(spec);
  const std::size_t w = static_cast<std::size_t>(config.window_size);
  const std::size_t frames_per_window = (windows.front().length - w) /
                                            static_cast<std::size_t>(config.hop) +
                                        1;

  std::vector<WindowEstimate> out;
  out.reserve(windows.size());
  for (const WindowSpan& span : windows) {
    WindowEstimate we;
    we.window_index = span.index;
    we.start_s = span.start_s;
    const std::size_t first = (span.start + config.hop - 1) / config.hop;
    try {
      if (first + frames_per_window > spec.frame_count()) {
        Fail(ErrorCode::kInsufficientData, "window runs past the last frame");
      }
      const Spectrogram slice = spec.Slice(first, frames_per_window);
      FeatureSeries p;
      p.rate_hz = energy.rate_hz;
      p.values.assign(energy.values.begin() + first,
                      energy.values.begin() + first + frames_per_window);
      const auto mask = QuantileMask(p.values, config.quantile);
      const auto average = AverageBreathSpectrum(slice, mask, config.p_norm);
      const FeatureSeries d =
          SpectralDissimilarity(slice, average, config.p_norm);
      const FeatureSeries c = CombineFeatures(p, d, config.a_p, config.a_d);
      const FeatureSeries feature = PrepareFeature(c, config.prep);
      we.estimate = EstimateRr(feature.values, feature.rate_hz,
                               config.estimator);
      we.estimate.channel = channel;
      we.estimate.window_index = span.index;
      we.valid = true;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kParameter) throw;
      we.valid = false;
      we.failure = e.what();
    }
    out.push_back(std::move(we));
  }
  return out;
}

}  // namespace earresp
