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

#include "earresp/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "earresp/error.hpp"

namespace earresp {

namespace {

using Complex = std::complex<double>;

enum class NumeratorShape {
  kLowpass,   // zeros at z = -1
  kHighpass,  // zeros at z = +1
  kBandpass,  // one zero at each of z = +1 and z = -1
};

// Analog Butterworth low-pass prototype poles (unit cutoff, left half-plane).
std::vector<Complex> PrototypePoles(int order) {
  std::vector<Complex> poles;
  poles.reserve(order);
  for (int k = 0; k < order; ++k) {
    const double theta =
        std::numbers::pi * (2.0 * k + order + 1) / (2.0 * order);
    poles.emplace_back(std::cos(theta), std::sin(theta));
  }
  return poles;
}

double Prewarp(double freq_hz, double fs_hz) {
  return 2.0 * fs_hz * std::tan(std::numbers::pi * freq_hz / fs_hz);
}

Complex Bilinear(Complex s, double fs_hz) {
  const double k = 2.0 * fs_hz;
  return (k + s) / (k - s);
}

Complex SectionResponse(const BiquadCoefficients& c, double omega) {
  const Complex z1 = std::polar(1.0, -omega);
  const Complex z2 = z1 * z1;
  return (c.b0 + c.b1 * z1 + c.b2 * z2) / (1.0 + c.a1 * z1 + c.a2 * z2);
}

// Groups z-plane poles (conjugates included) into sections, attaches the
// numerator shape and scales each section to unit magnitude at omega_ref.
std::vector<BiquadCoefficients> PolesToSections(std::vector<Complex> poles,
                                                NumeratorShape shape,
                                                double omega_ref) {
  constexpr double kImagTol = 1e-10;
  std::vector<Complex> upper;
  std::vector<double> real;
  for (const Complex& p : poles) {
    if (std::abs(p.imag()) <= kImagTol) {
      real.push_back(p.real());
    } else if (p.imag() > 0.0) {
      upper.push_back(p);
    }
  }
  std::sort(upper.begin(), upper.end(), [](Complex a, Complex b) {
    return std::abs(a) < std::abs(b);
  });
  std::sort(real.begin(), real.end());

  std::vector<BiquadCoefficients> sections;
  auto add = [&](double a1, double a2, bool first_order) {
    BiquadCoefficients c;
    c.a1 = a1;
    c.a2 = a2;
    switch (shape) {
      case NumeratorShape::kLowpass:
        if (first_order) {
          c.b0 = 1.0, c.b1 = 1.0, c.b2 = 0.0;
        } else {
          c.b0 = 1.0, c.b1 = 2.0, c.b2 = 1.0;
        }
        break;
      case NumeratorShape::kHighpass:
        if (first_order) {
          c.b0 = 1.0, c.b1 = -1.0, c.b2 = 0.0;
        } else {
          c.b0 = 1.0, c.b1 = -2.0, c.b2 = 1.0;
        }
        break;
      case NumeratorShape::kBandpass:
        c.b0 = 1.0, c.b1 = 0.0, c.b2 = -1.0;
        break;
    }
    const double gain = std::abs(SectionResponse(c, omega_ref));
    c.b0 /= gain;
    c.b1 /= gain;
    c.b2 /= gain;
    sections.push_back(c);
  };

  for (const Complex& p : upper) add(-2.0 * p.real(), std::norm(p), false);
  std::size_t i = 0;
  for (; i + 1 < real.size(); i += 2) {
    add(-(real[i] + real[i + 1]), real[i] * real[i + 1], false);
  }
  if (i < real.size()) add(-real[i], 0.0, true);
  return sections;
}

void CheckRate(double sample_rate_hz) {
  Require(std::isfinite(sample_rate_hz) && sample_rate_hz > 0.0,
          "sample rate must be positive");
}

}  // namespace

void ValidateBlock(const SampleBlock& block) {
  CheckRate(block.sample_rate_hz);
  Require(!block.samples.empty(), "sample block is empty");
  for (double v : block.samples) {
    Require(std::isfinite(v), "sample block contains non-finite samples");
  }
}

bool IsStableSection(const BiquadCoefficients& c) {
  // Both roots of z^2 + a1 z + a2 strictly inside the unit circle.
  return std::abs(c.a2) < 1.0 && std::abs(c.a1) < 1.0 + c.a2;
}

BiquadCascade::BiquadCascade(std::vector<BiquadCoefficients> sections)
    : sections_(std::move(sections)), state_(sections_.size()) {
  for (std::size_t i = 0; i < sections_.size(); ++i) {
    if (!IsStableSection(sections_[i])) {
      Fail(ErrorCode::kParameter,
           "biquad section " + std::to_string(i) + " is unstable");
    }
  }
}

void BiquadCascade::Process(std::span<const double> in, std::span<double> out) {
  Require(in.size() == out.size(), "biquad input/output length mismatch");
  for (std::size_t n = 0; n < in.size(); ++n) out[n] = Process(in[n]);
}

std::vector<double> BiquadCascade::Process(std::span<const double> in) {
  std::vector<double> out(in.size());
  Process(in, out);
  return out;
}

void BiquadCascade::Reset() {
  std::fill(state_.begin(), state_.end(), State{});
}

std::complex<double> BiquadCascade::Response(double freq_hz,
                                             double fs_hz) const {
  const double omega = 2.0 * std::numbers::pi * freq_hz / fs_hz;
  Complex h = 1.0;
  for (const auto& c : sections_) h *= SectionResponse(c, omega);
  return h;
}

double BiquadCascade::MagnitudeDb(double freq_hz, double fs_hz) const {
  return 20.0 * std::log10(std::abs(Response(freq_hz, fs_hz)));
}

double BiquadCascade::GroupDelay(double freq_hz, double fs_hz) const {
  const double omega = 2.0 * std::numbers::pi * freq_hz / fs_hz;
  const double step = 1e-5;
  double phase_lo = 0.0, phase_hi = 0.0;
  for (const auto& c : sections_) {
    phase_lo += std::arg(SectionResponse(c, omega - step));
    phase_hi += std::arg(SectionResponse(c, omega + step));
  }
  double diff = phase_hi - phase_lo;
  // Each section contributes less than pi of phase change over 2*step, so
  // wrapping only shows up as multiples of 2*pi.
  diff = std::remainder(diff, 2.0 * std::numbers::pi);
  return -diff / (2.0 * step);
}

BiquadCascade DesignLowpass(double cutoff_hz, double sample_rate_hz,
                            int order) {
  CheckRate(sample_rate_hz);
  Require(order >= 1, "filter order must be positive");
  Require(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0,
          "low-pass cutoff must lie in (0, fs/2)");
  const double wc = Prewarp(cutoff_hz, sample_rate_hz);
  std::vector<Complex> poles;
  for (const Complex& p : PrototypePoles(order)) {
    poles.push_back(Bilinear(wc * p, sample_rate_hz));
  }
  return BiquadCascade(PolesToSections(poles, NumeratorShape::kLowpass, 0.0));
}

BiquadCascade DesignHighpass(double cutoff_hz, double sample_rate_hz,
                             int order) {
  CheckRate(sample_rate_hz);
  Require(order >= 1, "filter order must be positive");
  Require(cutoff_hz > 0.0 && cutoff_hz < sample_rate_hz / 2.0,
          "high-pass cutoff must lie in (0, fs/2)");
  const double wc = Prewarp(cutoff_hz, sample_rate_hz);
  std::vector<Complex> poles;
  for (const Complex& p : PrototypePoles(order)) {
    poles.push_back(Bilinear(wc / p, sample_rate_hz));
  }
  return BiquadCascade(
      PolesToSections(poles, NumeratorShape::kHighpass, std::numbers::pi));
}

BiquadCascade DesignBandpass(double low_hz, double high_hz,
                             double sample_rate_hz, int order) {
  CheckRate(sample_rate_hz);
  Require(order >= 2 && order % 2 == 0,
          "band-pass order must be a positive even integer");
  Require(low_hz > 0.0 && low_hz < high_hz && high_hz < sample_rate_hz / 2.0,
          "band edges must satisfy 0 < low < high < fs/2");
  const double w1 = Prewarp(low_hz, sample_rate_hz);
  const double w2 = Prewarp(high_hz, sample_rate_hz);
  const double w0 = std::sqrt(w1 * w2);
  const double bw = w2 - w1;

  std::vector<Complex> poles;
  for (const Complex& p : PrototypePoles(order / 2)) {
    const Complex half = p * bw / 2.0;
    const Complex root = std::sqrt(half * half - w0 * w0);
    poles.push_back(Bilinear(half + root, sample_rate_hz));
    poles.push_back(Bilinear(half - root, sample_rate_hz));
  }
  // Digital frequency that the analog center w0 maps to.
  const double omega0 = 2.0 * std::atan(w0 / (2.0 * sample_rate_hz));
  return BiquadCascade(
      PolesToSections(poles, NumeratorShape::kBandpass, omega0));
}

// ---------------------------------------------------------------------------

namespace {

std::vector<int> PrimeFactorsDescending(int n) {
  std::vector<int> factors;
  for (int p = 2; p * p <= n; ++p) {
    while (n % p == 0) {
      factors.push_back(p);
      n /= p;
    }
  }
  if (n > 1) factors.push_back(n);
  std::sort(factors.rbegin(), factors.rend());
  return factors;
}

constexpr int kAntialiasOrder = 8;
constexpr double kAntialiasFraction = 0.45;

}  // namespace

Decimator::Decimator(int factor, double input_rate_hz)
    : factor_(factor), input_rate_hz_(input_rate_hz) {
  Require(factor >= 1, "decimation factor must be >= 1");
  CheckRate(input_rate_hz);
  double rate = input_rate_hz;
  for (int f : PrimeFactorsDescending(factor)) {
    const double out_rate = rate / f;
    const double cutoff = kAntialiasFraction * out_rate / 2.0;
    stages_.push_back({f, DesignLowpass(cutoff, rate, kAntialiasOrder), 0});
    rate = out_rate;
  }
}

std::vector<double> Decimator::Process(std::span<const double> in) {
  std::vector<double> current(in.begin(), in.end());
  for (Stage& stage : stages_) {
    std::vector<double> next;
    next.reserve(current.size() / stage.factor + 1);
    for (double x : current) {
      const double y = stage.antialias.Process(x);
      if (stage.phase == 0) next.push_back(y);
      stage.phase = (stage.phase + 1) % stage.factor;
    }
    current = std::move(next);
  }
  return current;
}

void Decimator::Reset() {
  for (Stage& stage : stages_) {
    stage.antialias.Reset();
    stage.phase = 0;
  }
}

std::vector<int> Decimator::stage_factors() const {
  std::vector<int> f;
  for (const Stage& s : stages_) f.push_back(s.factor);
  return f;
}

SampleBlock Decimate(const SampleBlock& input, int factor) {
  Require(factor >= 1, "decimation factor must be >= 1");
  CheckRate(input.sample_rate_hz);
  if (factor == 1) return input;
  Decimator decimator(factor, input.sample_rate_hz);
  return {decimator.Process(input.samples), decimator.output_rate_hz()};
}

// ---------------------------------------------------------------------------

const char* LmsModeName(LmsMode mode) {
  switch (mode) {
    case LmsMode::kPlain:
      return "plain";
    case LmsMode::kNlms:
      return "nlms";
    case LmsMode::kDelayedLeakyClipped:
      return "delayed-leaky-clipped";
  }
  return "unknown";
}

LmsMode ParseLmsMode(const std::string& name) {
  if (name == "plain" || name == "lms") return LmsMode::kPlain;
  if (name == "nlms") return LmsMode::kNlms;
  if (name == "ans" || name == "delayed-leaky-clipped" || name == "dlc") {
    return LmsMode::kDelayedLeakyClipped;
  }
  Fail(ErrorCode::kParameter, "unknown LMS mode '" + name + "'");
}

void LmsConfig::Validate() const {
  Require(taps >= 1, "LMS taps must be positive");
  Require(delay >= 0, "LMS delay must be non-negative");
  Require(std::isfinite(step_size) && step_size > 0.0,
          "LMS step size must be positive");
  Require(leakage >= 0.0 && effective_leak() < 1.0,
          "LMS leak gamma*mu must lie in [0, 1)");
  Require(clip_threshold > 0.0, "LMS clip threshold must be positive");
  Require(epsilon > 0.0, "LMS epsilon must be positive");
}

double ClipFactor(double error, double reference_energy, double clip_threshold,
                  double epsilon) {
  return std::min(1.0, clip_threshold /
                           (epsilon + std::abs(error) * reference_energy));
}

LmsFilter::LmsFilter(const LmsConfig& config)
    : config_(config), taps_(config.taps), delay_(config.effective_delay()) {
  config_.Validate();
  Reset();
}

void LmsFilter::Reset() {
  weights_.assign(taps_, 0.0);
  ref_line_.assign(2 * static_cast<std::size_t>(taps_), 0.0);
  ref_pos_ = 0;
  desired_line_.assign(static_cast<std::size_t>(delay_) + 1, 0.0);
  desired_pos_ = 0;
  last_clip_ = 1.0;
  sample_index_ = 0;
}

void LmsFilter::SetWeights(std::span<const double> weights) {
  Require(weights.size() == weights_.size(), "weight vector length mismatch");
  std::copy(weights.begin(), weights.end(), weights_.begin());
}

double LmsFilter::Step(double reference, double desired) {
  ref_pos_ = (ref_pos_ == 0 ? taps_ : ref_pos_) - 1;
  ref_line_[ref_pos_] = reference;
  ref_line_[ref_pos_ + taps_] = reference;

  // desired_line_ holds d(n-K) .. d(n); the slot about to be overwritten is
  // the oldest, i.e. d(n-K) once the new sample is stored.
  desired_line_[desired_pos_] = desired;
  desired_pos_ = (desired_pos_ + 1) % (delay_ + 1);
  const double delayed = desired_line_[desired_pos_];

  const double* x = ref_line_.data() + ref_pos_;
  double* h = weights_.data();
  double estimate = 0.0;
  double energy = 0.0;
#pragma omp simd reduction(+ : estimate, energy)
  for (int i = 0; i < taps_; ++i) {
    estimate += h[i] * x[i];
    energy += x[i] * x[i];
  }
  const double error = delayed - estimate;

  double guard = 0.0;
  switch (config_.mode) {
    case LmsMode::kPlain: {
      const double g = config_.step_size * error;
#pragma omp simd reduction(+ : guard)
      for (int i = 0; i < taps_; ++i) {
        h[i] = h[i] + g * x[i];
        guard += h[i];
      }
      break;
    }
    case LmsMode::kNlms: {
      const double g =
          config_.step_size * error / (config_.epsilon + energy);
#pragma omp simd reduction(+ : guard)
      for (int i = 0; i < taps_; ++i) {
        h[i] = h[i] + g * x[i];
        guard += h[i];
      }
      break;
    }
    case LmsMode::kDelayedLeakyClipped: {
      last_clip_ = ClipFactor(error, energy, config_.clip_threshold,
                              config_.epsilon);
      const double keep = 1.0 - config_.effective_leak();
      const double g = config_.step_size * last_clip_ * error;
#pragma omp simd reduction(+ : guard)
      for (int i = 0; i < taps_; ++i) {
        h[i] = keep * h[i] + g * x[i];
        guard += h[i];
      }
      break;
    }
  }

  const std::size_t index = sample_index_++;
  if (!std::isfinite(guard) || !std::isfinite(error)) {
    throw DivergenceError(index, "adaptive filter diverged at sample " +
                                     std::to_string(index));
  }
  return error;
}

void LmsFilter::Process(std::span<const double> reference,
                        std::span<const double> desired,
                        std::span<double> error) {
  if (reference.size() != desired.size() || reference.size() != error.size()) {
    Fail(ErrorCode::kAlignment, "LMS reference/desired length mismatch");
  }
  for (std::size_t n = 0; n < reference.size(); ++n) {
    error[n] = Step(reference[n], desired[n]);
  }
}

// ---------------------------------------------------------------------------

AnsProcessor::AnsProcessor(const AnsConfig& config, double sample_rate_hz)
    : config_(config),
      sample_rate_hz_(sample_rate_hz),
      iem_band_(DesignBandpass(config.band_low_hz, config.band_high_hz,
                               sample_rate_hz, config.band_order)),
      oem_band_(iem_band_),
      lms_(config.lms) {
  const double center = std::sqrt(config.band_low_hz * config.band_high_hz);
  declared_delay_ = iem_band_.GroupDelay(center, sample_rate_hz);
  if (config_.adaptive) declared_delay_ += config.lms.effective_delay();
}

void AnsProcessor::Process(std::span<const double> iem,
                           std::span<const double> oem, std::span<double> out) {
  if (iem.size() != oem.size() || iem.size() != out.size()) {
    Fail(ErrorCode::kAlignment,
         "IEM/OEM block length mismatch (" + std::to_string(iem.size()) +
             " vs " + std::to_string(oem.size()) + ")");
  }
  for (std::size_t n = 0; n < iem.size(); ++n) {
    const double d = iem_band_.Process(iem[n]);
    const double x = oem_band_.Process(oem[n]);
    out[n] = config_.adaptive ? lms_.Step(x, d) : d;
  }
}

void AnsProcessor::Reset() {
  iem_band_.Reset();
  oem_band_.Reset();
  lms_.Reset();
}

std::vector<SampleBlock> AnsProcess(std::span<const SampleBlock> iem,
                                    std::span<const SampleBlock> oem,
                                    const AnsConfig& config) {
  if (iem.size() != oem.size()) {
    Fail(ErrorCode::kAlignment, "IEM and OEM streams have different lengths");
  }
  std::vector<SampleBlock> out;
  if (iem.empty()) return out;
  const double rate = iem.front().sample_rate_hz;
  AnsProcessor processor(config, rate);
  out.reserve(iem.size());
  for (std::size_t b = 0; b < iem.size(); ++b) {
    if (iem[b].sample_rate_hz != rate || oem[b].sample_rate_hz != rate) {
      Fail(ErrorCode::kAlignment,
           "sample rate mismatch in block " + std::to_string(b));
    }
    SampleBlock block{std::vector<double>(iem[b].size()), rate};
    processor.Process(iem[b].samples, oem[b].samples, block.samples);
    out.push_back(std::move(block));
  }
  return out;
}

std::vector<SampleBlock> SplitBlocks(const SampleBlock& signal,
                                     std::size_t block_size) {
  Require(block_size > 0, "block size must be positive");
  std::vector<SampleBlock> blocks;
  for (std::size_t start = 0; start < signal.size(); start += block_size) {
    const std::size_t end = std::min(signal.size(), start + block_size);
    blocks.push_back({std::vector<double>(signal.samples.begin() + start,
                                          signal.samples.begin() + end),
                      signal.sample_rate_hz});
  }
  return blocks;
}

SampleBlock JoinBlocks(std::span<const SampleBlock> blocks) {
  SampleBlock out;
  if (!blocks.empty()) out.sample_rate_hz = blocks.front().sample_rate_hz;
  for (const SampleBlock& b : blocks) {
    out.samples.insert(out.samples.end(), b.samples.begin(), b.samples.end());
  }
  return out;
}

}  // namespace earresp
