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

#include "earresp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "earresp/error.hpp"
#include "earresp/fft.hpp"

namespace earresp {

namespace {

constexpr double kBandLowHz = 200.0;
constexpr double kBandHighHz = 1000.0;
constexpr double kBreathRms = 0.05;
constexpr double kReferenceCpm = 15.0;
constexpr double kInspirationS = 0.8;
constexpr double kExpirationS = 1.0;
constexpr double kLeadS = 0.1;
constexpr double kTurnS = 0.5;
constexpr double kInspirationGain = 1.0;
constexpr double kExpirationGain = 0.7;

// Distinct streams per purpose so changing one generator leaves the others.
std::mt19937_64 Stream(std::uint64_t seed, std::uint64_t purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

std::vector<double> Gaussian(std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, 1.0);
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  return x;
}

void NormalizeRms(std::vector<double>& x, double target) {
  double ss = 0.0;
  for (double v : x) ss += v * v;
  if (ss <= 0.0) return;
  const double scale = target / std::sqrt(ss / static_cast<double>(x.size()));
  for (double& v : x) v *= scale;
}

std::vector<double> BandLimited(std::size_t n, double fs, double low,
                                double high, int order, std::mt19937_64& rng) {
  std::vector<double> x = Gaussian(n, rng);
  high = std::min(high, 0.45 * fs);
  BiquadCascade band = DesignBandpass(low, high, fs, order);
  for (double& v : x) v = band.Process(v);
  return x;
}

std::vector<double> GenerateNoise(NoiseKind kind, std::size_t n, double fs,
                                  std::mt19937_64& rng) {
  std::vector<double> noise;
  switch (kind) {
    case NoiseKind::kWhite:
      noise = Gaussian(n, rng);
      break;
    case NoiseKind::kBandLimited:
      noise = BandLimited(n, fs, 150.0, 1500.0, 4, rng);
      break;
    case NoiseKind::kAmplitudeModulated: {
      // Babble-like carrier under a slowly varying log-normal envelope.
      noise = BandLimited(n, fs, 100.0, 3000.0, 4, rng);
      std::vector<double> z = Gaussian(n, rng);
      BiquadCascade smooth = DesignLowpass(2.0, fs, 2);
      for (double& v : z) v = smooth.Process(v);
      NormalizeRms(z, 1.0);
      for (std::size_t i = 0; i < n; ++i) noise[i] *= std::exp(0.6 * z[i]);
      break;
    }
    case NoiseKind::kTonalMixture: {
      std::uniform_real_distribution<double> freq(150.0,
                                                  std::min(1200.0, 0.45 * fs));
      std::uniform_real_distribution<double> amp(0.5, 1.0);
      std::uniform_real_distribution<double> rate(0.5, 2.0);
      std::uniform_real_distribution<double> phase(0.0,
                                                   2.0 * std::numbers::pi);
      noise.assign(n, 0.0);
      for (int k = 0; k < 8; ++k) {
        const double f = freq(rng), a = amp(rng), r = rate(rng);
        const double p0 = phase(rng), p1 = phase(rng);
        for (std::size_t i = 0; i < n; ++i) {
          const double t = static_cast<double>(i) / fs;
          const double mod = 1.0 + 0.8 * std::sin(2.0 * std::numbers::pi * r * t + p1);
          noise[i] += a * mod * std::sin(2.0 * std::numbers::pi * f * t + p0);
        }
      }
      break;
    }
  }
  NormalizeRms(noise, 1.0);
  return noise;
}

std::vector<double> Convolve(std::span<const double> path,
                             std::span<const double> x) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const std::size_t taps = std::min(path.size(), n + 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < taps; ++i) acc += path[i] * x[n - i];
    y[n] = acc;
  }
  return y;
}

}  // namespace

const char* NoiseKindName(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kWhite:
      return "white";
    case NoiseKind::kBandLimited:
      return "band-limited";
    case NoiseKind::kAmplitudeModulated:
      return "amplitude-modulated";
    case NoiseKind::kTonalMixture:
      return "tonal-mixture";
  }
  return "unknown";
}

NoiseKind ParseNoiseKind(const std::string& name) {
  if (name == "white") return NoiseKind::kWhite;
  if (name == "band-limited" || name == "band") return NoiseKind::kBandLimited;
  if (name == "amplitude-modulated" || name == "cafeteria" || name == "am") {
    return NoiseKind::kAmplitudeModulated;
  }
  if (name == "tonal-mixture" || name == "music" || name == "tonal") {
    return NoiseKind::kTonalMixture;
  }
  Fail(ErrorCode::kParameter, "unknown noise kind '" + name + "'");
}

BreathingSignal GenerateBreathing(double rate_cpm, double duration_s,
                                  double fs_hz, std::uint64_t seed,
                                  double belt_rate_hz) {
  Require(rate_cpm > 4.0 && rate_cpm < 60.0,
          "breathing rate must lie in (4, 60) CPM");
  Require(duration_s >= 0.0, "duration must be non-negative");
  Require(fs_hz > 2.0 * kBandHighHz, "audio rate must exceed 2 kHz");
  Require(belt_rate_hz > 0.0, "belt rate must be positive");

  BreathingSignal out;
  out.audio.sample_rate_hz = fs_hz;
  out.belt.sample_rate_hz = belt_rate_hz;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * fs_hz));
  if (n == 0) return out;

  const double period = 60.0 / rate_cpm;
  const double scale = kReferenceCpm / rate_cpm;
  // Inspiration, a post-inspiratory pause, expiration, then the expiratory pause.
  const double insp_len = kInspirationS * scale;
  const double exp_len = kExpirationS * scale;
  const double lead = kLeadS * scale;
  const double insp_offset = lead + insp_len / 2.0;
  const double exp_offset = lead + insp_len + kTurnS * scale + exp_len / 2.0;
  struct Burst {
    double center, length, gain;
  };
  std::vector<Burst> bursts;
  for (int k = 0;; ++k) {
    const double insp = k * period + insp_offset;
    const double expi = k * period + exp_offset;
    if (insp >= duration_s) break;
    bursts.push_back({insp, insp_len, kInspirationGain});
    if (expi < duration_s) {
      bursts.push_back({expi, exp_len, kExpirationGain});
    }
  }
  // Lung volume peaks at the end of inspiration.
  const double volume_peak = lead + insp_len + kTurnS * scale / 2.0;

  out.envelope.assign(n, 0.0);
  for (const Burst& b : bursts) {
    out.burst_centers_s.push_back(b.center);
    const double begin = b.center - b.length / 2.0;
    const auto first = static_cast<std::size_t>(
        std::max(0.0, std::ceil(begin * fs_hz)));
    const auto last = std::min(
        n, static_cast<std::size_t>(std::floor((begin + b.length) * fs_hz)) + 1);
    for (std::size_t i = first; i < last; ++i) {
      const double u = (static_cast<double>(i) / fs_hz - begin) / b.length;
      if (u < 0.0 || u > 1.0) continue;
      const double hann = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * u);
      out.envelope[i] += b.gain * hann;
    }
  }

  auto rng = Stream(seed, 1);
  std::vector<double> carrier =
      BandLimited(n, fs_hz, kBandLowHz, kBandHighHz, 8, rng);
  NormalizeRms(carrier, kBreathRms);
  out.audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    out.audio.samples[i] = carrier[i] * out.envelope[i];
  }

  const auto belt_n =
      static_cast<std::size_t>(std::llround(duration_s * belt_rate_hz));
  const double f = rate_cpm / 60.0;
  out.belt.samples.resize(belt_n);
  for (std::size_t j = 0; j < belt_n; ++j) {
    const double t = static_cast<double>(j) / belt_rate_hz;
    out.belt.samples[j] = std::cos(2.0 * std::numbers::pi * f * (t - volume_peak));
  }
  return out;
}

std::vector<double> RandomPath(int taps, std::uint64_t seed) {
  Require(taps >= 1, "path needs at least one tap");
  auto rng = Stream(seed, 3);
  std::vector<double> path = Gaussian(static_cast<std::size_t>(taps), rng);
  const double decay = std::max(1.0, taps / 5.0);
  double ss = 0.0;
  for (int i = 0; i < taps; ++i) {
    path[i] *= std::exp(-i / decay);
    ss += path[i] * path[i];
  }
  for (double& v : path) v /= std::sqrt(ss);
  return path;
}

double InBandEnergy(std::span<const double> x, double fs_hz, double low_hz,
                    double high_hz) {
  if (x.empty()) return 0.0;
  RealFft fft(x.size());
  const auto bins = fft.Transform(x);
  const double spacing = fs_hz / static_cast<double>(x.size());
  double energy = 0.0;
  for (std::size_t k = 0; k < bins.size(); ++k) {
    const double f = static_cast<double>(k) * spacing;
    if (f < low_hz || f > high_hz) continue;
    // One-sided bins other than DC and Nyquist stand for two.
    const bool edge = k == 0 || (x.size() % 2 == 0 && k == bins.size() - 1);
    energy += (edge ? 1.0 : 2.0) * std::norm(bins[k]);
  }
  return energy / static_cast<double>(x.size());
}

void SynthScenario::Validate() const {
  Require(breath_rate_cpm > 4.0 && breath_rate_cpm < 60.0,
          "breathing rate must lie in (4, 60) CPM");
  Require(duration_s >= 0.0, "duration must be non-negative");
  Require(fs_hz > 2.0 * kBandHighHz, "audio rate must exceed 2 kHz");
  Require(!std::isnan(snr_db), "SNR must be a number");
}

ScenarioSignals GenerateScenario(const SynthScenario& s) {
  s.Validate();
  ScenarioSignals out;
  BreathingSignal breathing = GenerateBreathing(
      s.breath_rate_cpm, s.duration_s, s.fs_hz, s.seed, s.belt_rate_hz);
  const std::size_t n = breathing.audio.size();
  out.clean_breath = breathing.audio;
  out.belt = std::move(breathing.belt);
  out.path_taps = s.path_taps.empty() ? RandomPath(128, s.seed) : s.path_taps;
  out.oem = {std::vector<double>(n, 0.0), s.fs_hz};
  out.iem_noise = {std::vector<double>(n, 0.0), s.fs_hz};

  if (n > 0 && std::isfinite(s.snr_db)) {
    auto rng = Stream(s.seed, 2);
    const std::vector<double> noise = GenerateNoise(s.noise_kind, n, s.fs_hz, rng);
    const std::vector<double> unit_iem = Convolve(out.path_taps, noise);
    const double breath_energy =
        InBandEnergy(out.clean_breath.samples, s.fs_hz, kBandLowHz, kBandHighHz);
    const double noise_energy =
        InBandEnergy(unit_iem, s.fs_hz, kBandLowHz, kBandHighHz);
    Require(noise_energy > 0.0, "noise has no energy in the 200-1000 Hz band");
    out.noise_gain = std::sqrt(breath_energy /
                               (noise_energy * std::pow(10.0, s.snr_db / 10.0)));
    for (std::size_t i = 0; i < n; ++i) {
      out.oem.samples[i] = out.noise_gain * noise[i];
    }
    out.iem_noise.samples = Convolve(out.path_taps, out.oem.samples);
  } else if (n > 0) {
    Require(s.snr_db > 0.0, "SNR of -inf is not a scenario");
  }

  out.iem = out.clean_breath;
  for (std::size_t i = 0; i < n; ++i) {
    out.iem.samples[i] += out.iem_noise.samples[i];
  }

  for (const WindowSpan& w :
       SegmentWindows(n, s.fs_hz, s.window_s, s.overlap)) {
    (void)w;
    out.truth_cpm.push_back(s.breath_rate_cpm);
  }
  return out;
}

}  // namespace earresp
