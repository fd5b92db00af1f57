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

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace earresp {

// Fixed-rate mono buffer, the unit of streaming. Samples are full-scale
// normalized to [-1, 1] when they come from audio containers.
struct SampleBlock {
  std::vector<double> samples;
  double sample_rate_hz = 0.0;

  std::size_t size() const { return samples.size(); }
  double duration_s() const {
    return static_cast<double>(samples.size()) / sample_rate_hz;
  }
};

// Throws a parameter error on an empty block, non-positive rate or
// non-finite samples.
void ValidateBlock(const SampleBlock& block);

struct BiquadCoefficients {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0;
  double a1 = 0.0, a2 = 0.0;
};

// Cascade of second-order sections in transposed direct form II.
class BiquadCascade {
 public:
  BiquadCascade() = default;
  // Rejects sections whose poles are not strictly inside the unit circle.
  explicit BiquadCascade(std::vector<BiquadCoefficients> sections);

  double Process(double x) {
    for (std::size_t i = 0; i < sections_.size(); ++i) {
      const BiquadCoefficients& c = sections_[i];
      State& s = state_[i];
      const double y = c.b0 * x + s.z1;
      s.z1 = c.b1 * x - c.a1 * y + s.z2;
      s.z2 = c.b2 * x - c.a2 * y;
      x = y;
    }
    return x;
  }

  void Process(std::span<const double> in, std::span<double> out);
  std::vector<double> Process(std::span<const double> in);

  void Reset();

  // Complex frequency response at freq_hz for sample rate fs_hz.
  std::complex<double> Response(double freq_hz, double fs_hz) const;
  double MagnitudeDb(double freq_hz, double fs_hz) const;
  // Group delay in samples, by central difference of the unwrapped phase.
  double GroupDelay(double freq_hz, double fs_hz) const;

  const std::vector<BiquadCoefficients>& sections() const { return sections_; }

 private:
  struct State {
    double z1 = 0.0, z2 = 0.0;
  };
  std::vector<BiquadCoefficients> sections_;
  std::vector<State> state_;
};

bool IsStableSection(const BiquadCoefficients& c);

// Butterworth designs by bilinear transform with prewarped edges. `order` is
// the order of the resulting digital filter; a band-pass of order N is built
// from an order N/2 low-pass prototype. Unity gain at DC (low-pass), Nyquist
// (high-pass) or the geometric band center (band-pass).
BiquadCascade DesignLowpass(double cutoff_hz, double sample_rate_hz, int order);
BiquadCascade DesignHighpass(double cutoff_hz, double sample_rate_hz,
                             int order);
BiquadCascade DesignBandpass(double low_hz, double high_hz,
                             double sample_rate_hz, int order);

// Staged integer-factor decimator. Each stage is one prime factor (largest
// first) preceded by an 8th-order Butterworth anti-alias low-pass at 0.45 of
// the stage's output Nyquist. State carries across calls, so any block
// partition of the input gives the same output.
class Decimator {
 public:
  Decimator(int factor, double input_rate_hz);

  std::vector<double> Process(std::span<const double> in);
  void Reset();

  int factor() const { return factor_; }
  double output_rate_hz() const { return input_rate_hz_ / factor_; }
  std::vector<int> stage_factors() const;

 private:
  struct Stage {
    int factor;
    BiquadCascade antialias;
    int phase = 0;
  };
  int factor_;
  double input_rate_hz_;
  std::vector<Stage> stages_;
};

SampleBlock Decimate(const SampleBlock& input, int factor);

// ---------------------------------------------------------------------------
// Adaptive filters.

enum class LmsMode {
  kPlain,
  kNlms,
  kDelayedLeakyClipped,
};

const char* LmsModeName(LmsMode mode);
// Accepts "plain", "lms", "nlms", "ans", "dlc", "delayed-leaky-clipped".
// Throws a parameter error otherwise.
LmsMode ParseLmsMode(const std::string& name);

struct LmsConfig {
  int taps = 256;
  int delay = 64;  // K, used by the delayed-leaky-clipped mode only
  double step_size = 0.05;
  double leakage = 2e-5;  // gamma; effective leak nu = gamma * mu
  double clip_threshold = 1.0;
  double epsilon = 1e-8;
  LmsMode mode = LmsMode::kDelayedLeakyClipped;

  double effective_leak() const { return leakage * step_size; }
  int effective_delay() const {
    return mode == LmsMode::kDelayedLeakyClipped ? delay : 0;
  }
  void Validate() const;
};

// Clip factor s_n = min(1, tau / (eps + |e| * x^T x)).
double ClipFactor(double error, double reference_energy, double clip_threshold,
                  double epsilon);

// Adaptive FIR with reference and delayed-desired delay lines.
//
// Per sample: e(n) = d(n-K) - h(n)^T x(n), followed by the mode's update.
// x(n) = [x(n), x(n-1), ..., x(n-M+1)].
class LmsFilter {
 public:
  explicit LmsFilter(const LmsConfig& config);

  // Pushes one reference/desired pair and returns e(n). Throws
  // DivergenceError if the weights stop being finite.
  double Step(double reference, double desired);

  void Process(std::span<const double> reference,
               std::span<const double> desired, std::span<double> error);

  std::span<const double> weights() const { return weights_; }
  void SetWeights(std::span<const double> weights);
  // Most recent reference vector x(n), newest first.
  std::span<const double> reference_vector() const {
    return {ref_line_.data() + ref_pos_, static_cast<std::size_t>(taps_)};
  }
  double last_clip_factor() const { return last_clip_; }
  std::size_t samples_processed() const { return sample_index_; }
  const LmsConfig& config() const { return config_; }

  void Reset();

 private:
  LmsConfig config_;
  int taps_;
  int delay_;
  std::vector<double> weights_;
  // Doubled ring so x(n) is always a contiguous span.
  std::vector<double> ref_line_;
  int ref_pos_ = 0;
  std::vector<double> desired_line_;
  int desired_pos_ = 0;
  double last_clip_ = 1.0;
  std::size_t sample_index_ = 0;
};

// Adaptive noise suppression front end: both channels are band-pass filtered,
// then the OEM drives the adaptive filter as reference and the IEM is the
// desired signal. The output is the error signal e(n).
struct AnsConfig {
  LmsConfig lms;
  double band_low_hz = 200.0;
  double band_high_hz = 1000.0;
  int band_order = 4;
  // false: band-pass only (no adaptive stage), the comparison baseline.
  bool adaptive = true;
};

class AnsProcessor {
 public:
  AnsProcessor(const AnsConfig& config, double sample_rate_hz);

  // iem, oem and out must have the same length.
  void Process(std::span<const double> iem, std::span<const double> oem,
               std::span<double> out);

  // Delay of the output relative to the raw IEM, in samples: K plus the
  // band-pass group delay at the geometric band center.
  double declared_delay_samples() const { return declared_delay_; }
  double sample_rate_hz() const { return sample_rate_hz_; }
  const LmsFilter& filter() const { return lms_; }
  void Reset();

 private:
  AnsConfig config_;
  double sample_rate_hz_;
  BiquadCascade iem_band_;
  BiquadCascade oem_band_;
  LmsFilter lms_;
  double declared_delay_ = 0.0;
};

// Block-stream form. Blocks must arrive in lockstep: equal counts, equal
// per-block lengths and rates; otherwise an alignment error is thrown.
std::vector<SampleBlock> AnsProcess(std::span<const SampleBlock> iem,
                                    std::span<const SampleBlock> oem,
                                    const AnsConfig& config);

// Splits a signal into consecutive blocks of `block_size` (last may be short).
std::vector<SampleBlock> SplitBlocks(const SampleBlock& signal,
                                     std::size_t block_size);
SampleBlock JoinBlocks(std::span<const SampleBlock> blocks);

}  // namespace earresp
