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

#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "earresp/error.hpp"
#include "earresp/fft.hpp"
#include "earresp/respiration.hpp"
#include "earresp/synth.hpp"
#include "oracle.hpp"

using namespace earresp;

namespace {

Spectrogram MakeSpec(std::vector<std::vector<double>> frames) {
  Spectrogram s;
  s.bin_count = frames.front().size();
  for (const auto& f : frames) s.magnitudes.insert(s.magnitudes.end(), f.begin(), f.end());
  s.frame_rate_hz = 125.0;
  return s;
}

ErrorCode CodeOf(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::kParameter;
}

constexpr double kFeatureRate = 125.0 / 32.0;

std::vector<double> FeatureSine(std::vector<std::pair<double, double>> parts, std::size_t n) {
  std::vector<double> c(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFeatureRate;
    for (auto [f, a] : parts) c[i] += a * std::cos(2.0 * std::numbers::pi * f * t);
  }
  return c;
}

}  // namespace

TEST_CASE("STFT") {
  SUBCASE("zero signal") {
    const Spectrogram s = Stft(SampleBlock{std::vector<double>(1000, 0.0), 2000.0}, 128, 16);
    CHECK(s.bin_count == 65);
    CHECK(s.frame_count() == (1000 - 128) / 16 + 1);
    CHECK(s.frame_rate_hz == 125.0);
    CHECK(s.bin_spacing_hz == 15.625);
    for (double m : s.magnitudes) REQUIRE(m == 0.0);
  }
  SUBCASE("250 Hz lands in bin 16") {
    const Spectrogram s = Stft(SampleBlock{oracle::Sine(250.0, 2000.0, 2000), 2000.0}, 128, 16);
    for (std::size_t t = 0; t < s.frame_count(); ++t) {
      const auto f = s.frame(t);
      REQUIRE(std::max_element(f.begin(), f.end()) - f.begin() == 16);
    }
  }
  SUBCASE("impulse gives a flat spectrum at the window coefficient") {
    std::vector<double> x(128, 0.0);
    x[50] = 1.0;
    const Spectrogram s = Stft(SampleBlock{x, 2000.0}, 128, 16);
    REQUIRE(s.frame_count() == 1);
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * 50.0 / 127.0);
    for (double m : s.frame(0)) CHECK(m == doctest::Approx(w).epsilon(1e-12));
  }
  SUBCASE("bins agree with a direct DFT") {
    const auto x = oracle::WhiteNoise(400, 17);
    const Spectrogram s = Stft(SampleBlock{x, 2000.0}, 128, 16);
    const auto w = HammingWindow(128);
    for (std::size_t t : {0u, 5u, 10u}) {
      std::vector<double> seg(128);
      for (int n = 0; n < 128; ++n) seg[n] = x[t * 16 + n] * w[n];
      for (int k : {0, 1, 31, 64}) {
        CHECK(s.frame(t)[k] == doctest::Approx(oracle::DftMagnitude(seg, k * 15.625, 2000.0)).epsilon(1e-9));
      }
    }
  }
  SUBCASE("shorter than one window") {
    CHECK(CodeOf([] { Stft(SampleBlock{std::vector<double>(100, 0.0), 2000.0}, 128, 16); }) ==
          ErrorCode::kInsufficientData);
  }
}

TEST_CASE("log spectral energy") {
  std::vector<double> one(65, 0.0), all(65, 1.0), zero(65, 0.0);
  one[3] = 1.0;
  const FeatureSeries p = LogSpectralEnergy(MakeSpec({one, all, zero}));
  REQUIRE(p.values.size() == 3);
  CHECK(p.rate_hz == 125.0);
  CHECK(p.values[0] == 0.0);
  CHECK(p.values[1] == doctest::Approx(std::log(65.0) / 65.0));
  CHECK(p.values[1] == doctest::Approx(0.0642).epsilon(1e-3));
  CHECK(p.values[2] == doctest::Approx(std::log(1e-12) / 65.0));
  CHECK(p.values[2] == doctest::Approx(-0.425).epsilon(1e-3));
}

TEST_CASE("quantile mask") {
  std::vector<double> ramp(100);
  for (int i = 0; i < 100; ++i) ramp[i] = i;
  std::vector<std::size_t> expected;
  for (std::size_t i = 85; i < 100; ++i) expected.push_back(i);
  CHECK(QuantileMask(ramp, 0.85) == expected);
  CHECK(EmpiricalQuantile(ramp, 0.85) == 85.0);

  const std::vector<double> flat(10, 2.5);
  CHECK(QuantileMask(flat, 0.85).size() == 10);
  CHECK(QuantileMask(std::vector<double>{-3.0}, 0.85) == std::vector<std::size_t>{0});

  SUBCASE("raising q never grows the mask") {
    const auto x = oracle::WhiteNoise(257, 5);
    std::size_t previous = x.size() + 1;
    for (double q = 0.05; q < 1.0; q += 0.05) {
      const auto m = QuantileMask(x, q);
      CHECK(m.size() <= previous);
      CHECK(!m.empty());
      previous = m.size();
    }
  }
  SUBCASE("matches a brute-force nearest rank") {
    const auto x = oracle::WhiteNoise(73, 6);
    std::vector<double> sorted = x;
    std::sort(sorted.begin(), sorted.end());
    for (double q : {0.1, 0.5, 0.85, 0.99}) {
      const auto rank = static_cast<std::size_t>(std::ceil(q * 72.0));
      CHECK(EmpiricalQuantile(x, q) == sorted[rank]);
    }
  }
}

TEST_CASE("p-norm") {
  CHECK(PNorm(std::vector<double>{3.0, 4.0}, 2.0) == doctest::Approx(5.0));
  CHECK(PNorm(std::vector<double>{1.0, 1.0}, 8.0) == doctest::Approx(std::pow(2.0, 1.0 / 8.0)));
  CHECK(PNorm(std::vector<double>{0.0, 0.0}, 8.0) == 0.0);
}

TEST_CASE("average breath spectrum") {
  const Spectrogram s = MakeSpec({{1.0, 0.0}, {0.0, 1.0}, {2.0, 2.0}});
  const std::vector<std::size_t> both{0, 1};
  const auto avg = AverageBreathSpectrum(s, both, 8.0);
  CHECK(avg[0] == doctest::Approx(0.5));
  CHECK(avg[1] == doctest::Approx(0.5));

  const std::vector<std::size_t> one{2};
  const auto single = AverageBreathSpectrum(s, one, 8.0);
  const double norm = std::pow(2.0 * std::pow(2.0, 8.0), 1.0 / 8.0);
  CHECK(single[0] == doctest::Approx(2.0 / norm));

  const Spectrogram twins = MakeSpec({{1.0, 3.0}, {1.0, 3.0}});
  const auto t = AverageBreathSpectrum(twins, both, 8.0);
  CHECK(t[1] == doctest::Approx(3.0 / PNorm(std::vector<double>{1.0, 3.0}, 8.0)));

  SUBCASE("zero frames are skipped") {
    const Spectrogram z = MakeSpec({{0.0, 0.0}, {0.0, 4.0}});
    const auto a = AverageBreathSpectrum(z, both, 8.0);
    CHECK(a[0] == 0.0);
    CHECK(a[1] == doctest::Approx(1.0));
    const std::vector<std::size_t> only_zero{0};
    CHECK(CodeOf([&] { AverageBreathSpectrum(z, only_zero, 8.0); }) == ErrorCode::kDegenerate);
  }
}

TEST_CASE("spectral dissimilarity") {
  const std::vector<double> avg{0.5, 0.5};
  const FeatureSeries d = SpectralDissimilarity(MakeSpec({{1.0, 0.0}, {10.0, 0.0}}), avg, 8.0);
  CHECK(d.values[0] == doctest::Approx(0.5 * std::log(0.5)));
  CHECK(d.values[0] == doctest::Approx(-0.3466).epsilon(1e-3));
  CHECK(d.values[1] == d.values[0]);

  // A frame that normalizes onto the average hits the floor.
  const double n = PNorm(std::vector<double>{1.0, 1.0}, 8.0);
  const std::vector<double> own{1.0 / n, 1.0 / n};
  const FeatureSeries f = SpectralDissimilarity(MakeSpec({{1.0, 1.0}}), own, 8.0);
  CHECK(f.values[0] == doctest::Approx(0.5 * std::log(1e-12)));
}

TEST_CASE("combined feature") {
  FeatureSeries p{{3.0, 4.0}, 125.0}, d{{0.0, 5.0}, 125.0};
  const FeatureSeries c = CombineFeatures(p, d, 0.5, 0.5);
  CHECK(c.values[0] == doctest::Approx(0.3));
  CHECK(c.values[1] == doctest::Approx(-0.1));

  const FeatureSeries same = CombineFeatures(p, p, 0.5, 0.5);
  for (double v : same.values) CHECK(v == 0.0);

  const FeatureSeries only_p = CombineFeatures(p, d, 2.0, 0.0);
  CHECK(only_p.values[0] == doctest::Approx(2.0 * 3.0 / 5.0));
  CHECK(only_p.values[1] == doctest::Approx(2.0 * 4.0 / 5.0));

  FeatureSeries zero{{0.0, 0.0}, 125.0};
  CHECK(CodeOf([&] { CombineFeatures(p, zero); }) == ErrorCode::kDegenerate);
}

TEST_CASE("feature preparation") {
  SUBCASE("constant input becomes zero") {
    const FeatureSeries out = PrepareFeature(FeatureSeries{std::vector<double>(2500, 4.2), 125.0});
    CHECK(out.rate_hz == doctest::Approx(kFeatureRate));
    CHECK(out.values.size() == 79);  // ceil(2500 / 32)
    for (double v : out.values) CHECK(std::abs(v) < 1e-12);
  }
  SUBCASE("0.3 Hz passes at unit amplitude") {
    const std::size_t n = 125 * 200;
    const FeatureSeries out = PrepareFeature(FeatureSeries{oracle::Sine(0.3, 125.0, n), 125.0});
    const auto direct = oracle::Sine(0.3, kFeatureRate, out.values.size());
    const std::size_t from = out.values.size() / 2;
    const double db = 20.0 * std::log10(oracle::Rms(out.values, from) / oracle::Rms(direct, from));
    CHECK(std::abs(db) <= 1.0);
    const std::span<const double> tail(out.values.data() + from, out.values.size() - from);
    CHECK(oracle::DftMagnitude(tail, 0.3, kFeatureRate) > 5.0 * oracle::DftMagnitude(tail, 0.6, kFeatureRate));
  }
  SUBCASE("10 Hz is removed") {
    const std::size_t n = 125 * 200;
    const FeatureSeries out = PrepareFeature(FeatureSeries{oracle::Sine(10.0, 125.0, n), 125.0});
    const std::size_t from = out.values.size() / 2;
    CHECK(20.0 * std::log10(oracle::Rms(out.values, from) / std::sqrt(0.5)) <= -20.0);
  }
}

TEST_CASE("rate estimator") {
  SUBCASE("pure 0.25 Hz feature") {
    const RrEstimate r = EstimateRr(FeatureSine({{0.25, 1.0}}, 78), kFeatureRate);
    CHECK(std::abs(r.rate_cpm - 15.0) <= 0.12);
    CHECK(r.peak_magnitude > 0.0);
  }
  SUBCASE("harmonic spectrum prefers the fundamental") {
    const auto c = FeatureSine({{0.2, 1.0}, {0.4, 1.5}}, 78);
    const RrEstimate r = EstimateRr(c, kFeatureRate);
    CHECK(std::abs(r.rate_cpm - 12.0) <= 0.12);
    const HarmonicSpectrum h = ComputeHarmonicSpectrum(c, kFeatureRate, 32);
    const auto bin = [&](double f) { return static_cast<std::size_t>(std::lround(f / h.bin_spacing_hz)); };
    // The plain spectrum would have picked the harmonic.
    CHECK(h.magnitude[bin(0.4)] > h.magnitude[bin(0.2)]);
    CHECK(h.harmonic[bin(0.2)] > h.harmonic[bin(0.4)]);
  }
  SUBCASE("padded length and bin spacing") {
    const HarmonicSpectrum h = ComputeHarmonicSpectrum(FeatureSine({{0.25, 1.0}}, 78), kFeatureRate, 32);
    CHECK(h.magnitude.size() == 4096 / 2 + 1);
    CHECK(h.bin_spacing_hz == doctest::Approx(kFeatureRate / 4096.0));
    CHECK(h.harmonic.size() <= h.magnitude.size() / 2 + 1);
  }
  SUBCASE("resolution bound over the search band") {
    const double bin_cpm = 60.0 * kFeatureRate / 4096.0;
    for (double cpm = 8.0; cpm <= 29.0; cpm += 1.7) {
      CAPTURE(cpm);
      const RrEstimate r = EstimateRr(FeatureSine({{cpm / 60.0, 1.0}}, 78), kFeatureRate);
      CHECK(std::abs(r.rate_cpm - cpm) <= std::max(bin_cpm, 0.12));
    }
  }
  SUBCASE("without the candidate floor a pure tone can lose to its sub-harmonic") {
    EstimatorConfig cfg;
    cfg.min_fundamental_ratio = 0.0;
    const RrEstimate r = EstimateRr(FeatureSine({{0.25, 1.0}}, 78), kFeatureRate, cfg);
    CHECK(r.rate_cpm < 10.0);
  }
  SUBCASE("zero and short inputs") {
    CHECK(CodeOf([] { EstimateRr(std::vector<double>(78, 0.0), kFeatureRate); }) == ErrorCode::kDegenerate);
    CHECK(CodeOf([] { EstimateRr(std::vector<double>(8, 1.0), kFeatureRate); }) == ErrorCode::kInsufficientData);
  }
  SUBCASE("search band limits the answer") {
    EstimatorConfig cfg;
    cfg.search_low_cpm = 20.0;
    cfg.search_high_cpm = 30.0;
    const RrEstimate r = EstimateRr(FeatureSine({{0.25, 1.0}, {0.4, 0.3}}, 78), kFeatureRate, cfg);
    CHECK(r.rate_cpm >= 20.0);
    CHECK(r.rate_cpm <= 30.0);
  }
}

TEST_CASE("windowed estimation") {
  RrConfig cfg;
  SUBCASE("too short for one window") {
    const SampleBlock audio{std::vector<double>(8000 * 10, 0.0), 8000.0};
    CHECK(MinimumSamples(cfg, 8000.0) == 160000);
    try {
      EstimateWindows(audio, cfg, Channel::kLeft);
      FAIL("expected insufficient data");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kInsufficientData);
      CHECK(std::string(e.what()).find("160000") != std::string::npos);
    }
  }
  SUBCASE("clean breathing, gain invariance and determinism") {
    const BreathingSignal b = GenerateBreathing(18.0, 60.0, 8000.0, 7);
    const auto w = EstimateWindows(b.audio, cfg, Channel::kRight);
    REQUIRE(w.size() == 5);
    SampleBlock quiet = b.audio;
    for (double& v : quiet.samples) v *= 0.01;
    const auto q = EstimateWindows(quiet, cfg, Channel::kRight);
    for (std::size_t i = 0; i < w.size(); ++i) {
      REQUIRE(w[i].valid);
      CHECK(w[i].start_s == doctest::Approx(10.0 * i));
      CHECK(w[i].estimate.channel == Channel::kRight);
      CHECK(std::abs(w[i].estimate.rate_cpm - 18.0) <= 0.3);
      CHECK(q[i].estimate.rate_cpm == w[i].estimate.rate_cpm);
    }
    const auto again = EstimateWindows(b.audio, cfg, Channel::kRight);
    for (std::size_t i = 0; i < w.size(); ++i) CHECK(again[i].estimate.rate_cpm == w[i].estimate.rate_cpm);
  }
  SUBCASE("dissimilarity is unchanged by input gain") {
    // A small noise floor keeps quiet frames out of the subnormal range,
    // where scaling is not exact.
    SampleBlock audio = Decimate(GenerateBreathing(15.0, 8.0, 8000.0, 9).audio, 4);
    const auto floor = oracle::WhiteNoise(audio.size(), 10, 1e-4);
    for (std::size_t i = 0; i < audio.size(); ++i) audio.samples[i] += floor[i];
    SampleBlock loud = audio;
    for (double& v : loud.samples) v *= 10.0;
    const Spectrogram s1 = Stft(audio, 128, 16);
    const Spectrogram s2 = Stft(loud, 128, 16);
    const auto p = LogSpectralEnergy(s1);
    const auto mask = QuantileMask(p.values);
    const auto avg1 = AverageBreathSpectrum(s1, mask);
    const auto avg2 = AverageBreathSpectrum(s2, mask);
    const auto d1 = SpectralDissimilarity(s1, avg1);
    const auto d2 = SpectralDissimilarity(s2, avg2);
    for (std::size_t t = 0; t < d1.values.size(); ++t) {
      REQUIRE(d2.values[t] == doctest::Approx(d1.values[t]).epsilon(1e-9));
    }
  }
}
