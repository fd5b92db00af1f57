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

#include <cmath>
#include <numbers>
#include <vector>

#include "earresp/dsp.hpp"
#include "earresp/error.hpp"
#include "earresp/synth.hpp"
#include "oracle.hpp"

using namespace earresp;

namespace {

// Steady-state gain in dB of a fresh filter for a sinusoid, measured over the
// last half of two seconds of output.
double SimulatedGainDb(BiquadCascade filter, double freq, double fs) {
  const auto n = static_cast<std::size_t>(2.0 * fs);
  const auto x = oracle::Sine(freq, fs, n);
  const auto y = filter.Process(x);
  return 20.0 * std::log10(oracle::Rms(y, n / 2) / oracle::Rms(x, n / 2));
}

}  // namespace

TEST_CASE("band-pass response matches the analog Butterworth prototype") {
  const BiquadCascade bp = DesignBandpass(200.0, 1000.0, 8000.0, 4);
  REQUIRE(bp.sections().size() == 2);
  for (const auto& s : bp.sections()) CHECK(IsStableSection(s));
  for (double f : {20.0, 50.0, 150.0, 200.0, 447.2, 600.0, 1000.0, 2000.0, 3900.0}) {
    CAPTURE(f);
    CHECK(bp.MagnitudeDb(f, 8000.0) ==
          doctest::Approx(oracle::ButterBandpassDb(f, 200.0, 1000.0, 8000.0, 4)).epsilon(1e-6));
  }
  // Band edges sit at -3 dB.
  CHECK(bp.MagnitudeDb(200.0, 8000.0) == doctest::Approx(-3.0103).epsilon(1e-4));
  CHECK(bp.MagnitudeDb(1000.0, 8000.0) == doctest::Approx(-3.0103).epsilon(1e-4));
}

TEST_CASE("band-pass passes 600 Hz and rejects 50 Hz and DC") {
  const BiquadCascade bp = DesignBandpass(200.0, 1000.0, 8000.0, 4);
  const double g600 = SimulatedGainDb(bp, 600.0, 8000.0);
  CHECK(std::abs(g600) <= 1.0);
  CHECK(g600 == doctest::Approx(oracle::ButterBandpassDb(600.0, 200.0, 1000.0, 8000.0, 4)).epsilon(0.01));
  CHECK(SimulatedGainDb(bp, 50.0, 8000.0) <= -24.0);

  BiquadCascade dc = bp;
  std::vector<double> ones(8000, 1.0);
  const auto y = dc.Process(ones);
  // Last 100 ms relative to a unit input.
  CHECK(20.0 * std::log10(oracle::Rms(y, 7200)) <= -60.0);
}

TEST_CASE("low-pass and high-pass designs match their prototypes") {
  for (int order : {1, 2, 3, 4, 8}) {
    CAPTURE(order);
    const BiquadCascade lp = DesignLowpass(450.0, 2000.0, order);
    const BiquadCascade hp = DesignHighpass(0.05, 125.0, order);
    for (const auto& s : lp.sections()) CHECK(IsStableSection(s));
    for (const auto& s : hp.sections()) CHECK(IsStableSection(s));
    for (double f : {10.0, 200.0, 450.0, 700.0, 950.0}) {
      CHECK(lp.MagnitudeDb(f, 2000.0) ==
            doctest::Approx(oracle::ButterLowpassDb(f, 450.0, 2000.0, order)).epsilon(1e-6));
    }
    for (double f : {0.01, 0.05, 0.3, 10.0}) {
      CHECK(hp.MagnitudeDb(f, 125.0) ==
            doctest::Approx(oracle::ButterHighpassDb(f, 0.05, 125.0, order)).epsilon(1e-6));
    }
  }
}

TEST_CASE("filter designs reject invalid parameters") {
  CHECK_THROWS_AS(DesignBandpass(1000.0, 200.0, 8000.0, 4), Error);
  CHECK_THROWS_AS(DesignBandpass(200.0, 1000.0, 8000.0, 3), Error);
  CHECK_THROWS_AS(DesignBandpass(200.0, 5000.0, 8000.0, 4), Error);
  CHECK_THROWS_AS(DesignLowpass(0.0, 8000.0, 2), Error);
  CHECK_THROWS_AS(DesignLowpass(100.0, -1.0, 2), Error);
  CHECK_THROWS_AS(DesignHighpass(100.0, 8000.0, 0), Error);
}

TEST_CASE("biquad processing is identical per sample, per block and in one call") {
  const auto x = oracle::WhiteNoise(5000, 3);
  BiquadCascade a = DesignBandpass(200.0, 1000.0, 8000.0, 6);
  BiquadCascade b = a, c = a;
  const auto whole = a.Process(x);
  std::vector<double> chunked(x.size());
  for (std::size_t i = 0; i < x.size(); i += 37) {
    const std::size_t n = std::min<std::size_t>(37, x.size() - i);
    b.Process(std::span(x).subspan(i, n), std::span(chunked).subspan(i, n));
  }
  for (std::size_t i = 0; i < x.size(); ++i) {
    REQUIRE(whole[i] == chunked[i]);
    REQUIRE(whole[i] == c.Process(x[i]));
  }
  a.Reset();
  CHECK(a.Process(x) == whole);
}

TEST_CASE("group delay of a first-order section matches the closed form") {
  // H(z) = 1 / (1 - a z^-1): tau(w) = (a cos w - a^2) / (1 - 2 a cos w + a^2)
  const double a = 0.6;
  BiquadCascade h({BiquadCoefficients{1.0, 0.0, 0.0, -a, 0.0}});
  for (double f : {100.0, 500.0, 1500.0}) {
    const double w = 2.0 * std::numbers::pi * f / 8000.0;
    const double expected = (a * std::cos(w) - a * a) / (1.0 - 2.0 * a * std::cos(w) + a * a);
    CHECK(h.GroupDelay(f, 8000.0) == doctest::Approx(expected).epsilon(1e-6));
  }
}

TEST_CASE("decimation") {
  SUBCASE("factor 1 is the identity") {
    const SampleBlock in{oracle::WhiteNoise(100, 1), 8000.0};
    const SampleBlock out = Decimate(in, 1);
    CHECK(out.samples == in.samples);
    CHECK(out.sample_rate_hz == 8000.0);
  }
  SUBCASE("100 Hz survives 8 kHz to 2 kHz at unit amplitude") {
    const SampleBlock in{oracle::Sine(100.0, 8000.0, 16000), 8000.0};
    const SampleBlock out = Decimate(in, 4);
    REQUIRE(out.sample_rate_hz == 2000.0);
    REQUIRE(out.size() == 4000);
    const auto direct = oracle::Sine(100.0, 2000.0, 4000);
    const double db = 20.0 * std::log10(oracle::Rms(out.samples, 2000) / oracle::Rms(direct, 2000));
    CHECK(std::abs(db) <= 1.0);
    // Same frequency: the DFT peak of the output sits at 100 Hz.
    const std::span<const double> tail(out.samples.data() + 2000, 2000);
    CHECK(oracle::DftMagnitude(tail, 100.0, 2000.0) > 10.0 * oracle::DftMagnitude(tail, 90.0, 2000.0));
  }
  SUBCASE("900 Hz is suppressed by the anti-alias filter") {
    const SampleBlock in{oracle::Sine(900.0, 8000.0, 16000), 8000.0};
    const SampleBlock out = Decimate(in, 4);
    const double db = 20.0 * std::log10(oracle::Rms(out.samples, 2000) / std::sqrt(0.5));
    CHECK(db <= -20.0);
    // The 8th-order stage at 0.45 x output Nyquist, 4 -> {2, 2}: the first
    // stage cuts at 0.45 * 2000 Hz, 900 Hz lands on its -3 dB point, the
    // second stage at 450 Hz removes the rest.
    const double first = oracle::ButterLowpassDb(900.0, 900.0, 8000.0, 8);
    const double second = oracle::ButterLowpassDb(900.0, 450.0, 4000.0, 8);
    CHECK(db == doctest::Approx(first + second).epsilon(0.05));
  }
  SUBCASE("composite factors run largest prime first") {
    CHECK(Decimator(12, 24000.0).stage_factors() == std::vector<int>{3, 2, 2});
    CHECK(Decimator(4, 8000.0).stage_factors() == std::vector<int>{2, 2});
    CHECK(Decimator(7, 7000.0).stage_factors() == std::vector<int>{7});
  }
  SUBCASE("streaming in odd blocks equals one call") {
    const auto x = oracle::WhiteNoise(9001, 5);
    Decimator a(4, 8000.0), b(4, 8000.0);
    const auto whole = a.Process(x);
    std::vector<double> pieces;
    for (std::size_t i = 0; i < x.size(); i += 13) {
      const auto part = b.Process(std::span(x).subspan(i, std::min<std::size_t>(13, x.size() - i)));
      pieces.insert(pieces.end(), part.begin(), part.end());
    }
    CHECK(pieces == whole);
    CHECK(whole.size() == (9001 + 3) / 4);
  }
}

TEST_CASE("LMS mode names") {
  CHECK(ParseLmsMode("nlms") == LmsMode::kNlms);
  CHECK(ParseLmsMode("plain") == LmsMode::kPlain);
  CHECK(ParseLmsMode("lms") == LmsMode::kPlain);
  CHECK(ParseLmsMode("delayed-leaky-clipped") == LmsMode::kDelayedLeakyClipped);
  CHECK(ParseLmsMode("ans") == LmsMode::kDelayedLeakyClipped);
  CHECK(ParseLmsMode(LmsModeName(LmsMode::kNlms)) == LmsMode::kNlms);
  CHECK_THROWS_AS(ParseLmsMode("rls"), Error);
}

TEST_CASE("zero reference: error is the delayed desired signal, weights untouched") {
  LmsConfig cfg;
  cfg.taps = 16;
  cfg.delay = 5;
  cfg.leakage = 0.0;
  LmsFilter f(cfg);
  const auto d = oracle::WhiteNoise(200, 9);
  for (std::size_t n = 0; n < d.size(); ++n) {
    const double e = f.Step(0.0, d[n]);
    const double expected = n >= 5 ? d[n - 5] : 0.0;
    REQUIRE(e == expected);
  }
  for (double w : f.weights()) CHECK(w == 0.0);
}

TEST_CASE("delayed feed-through converges to a unit impulse at tap K") {
  LmsConfig cfg;
  cfg.taps = 64;
  cfg.delay = 10;
  cfg.leakage = 0.0;
  cfg.step_size = 0.05;
  cfg.clip_threshold = 1e9;  // let the normalization stay at one
  LmsFilter f(cfg);
  const std::size_t n = 5 * 8000;
  const auto x = oracle::WhiteNoise(n, 11, 0.1);
  // d(n) = x(n - K); the filter sees d(n - K) = x(n - 2K), matched by h[2K].
  std::vector<double> d(n, 0.0), e(n);
  for (std::size_t i = 10; i < n; ++i) d[i] = x[i - 10];
  f.Process(x, d, e);
  // After convergence (second half).
  CHECK(oracle::Db(oracle::Energy(e, n / 2) / oracle::Energy(d, n / 2)) <= -20.0);
  const auto w = f.weights();
  CHECK(w[20] == doctest::Approx(1.0).epsilon(0.01));
  double others = 0.0;
  for (int i = 0; i < 64; ++i) {
    if (i != 20) others = std::max(others, std::abs(w[i]));
  }
  CHECK(others < 0.01);
}

TEST_CASE("clipped normalization scales the update by tau/(eps + |e| x'x)") {
  LmsConfig cfg;
  cfg.taps = 4;
  cfg.delay = 0;
  cfg.leakage = 0.0;
  cfg.step_size = 0.1;
  cfg.clip_threshold = 0.5;
  cfg.epsilon = 1e-8;
  LmsFilter f(cfg);
  // Build x(n) = [1, 1, 1, 1] (x'x = 4) with zero weights and pick d so
  // e * x'x = 2 tau, i.e. e = 0.25.
  for (int i = 0; i < 3; ++i) f.Step(1.0, 0.0);
  f.SetWeights(std::vector<double>(4, 0.0));
  const double e = f.Step(1.0, 0.25);
  CHECK(e == 0.25);
  const double s = 0.5 / (1e-8 + 0.25 * 4.0);
  CHECK(s < 1.0);
  CHECK(f.last_clip_factor() == doctest::Approx(s).epsilon(1e-15));
  for (double w : f.weights()) CHECK(w == doctest::Approx(0.1 * s * 0.25).epsilon(1e-15));

  CHECK(ClipFactor(0.0, 4.0, 0.5, 1e-8) == 1.0);
  CHECK(ClipFactor(-0.25, 4.0, 0.5, 1e-8) == doctest::Approx(s));
}

TEST_CASE("leakage shrinks the weights geometrically without excitation") {
  LmsConfig cfg;
  cfg.taps = 8;
  cfg.delay = 0;
  cfg.step_size = 0.05;
  cfg.leakage = 0.02;
  LmsFilter f(cfg);
  f.SetWeights(std::vector<double>(8, 1.0));
  for (int i = 0; i < 100; ++i) f.Step(0.0, 0.0);
  const double expected = std::pow(1.0 - 0.05 * 0.02, 100);
  for (double w : f.weights()) CHECK(w == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("plain and normalized LMS follow their textbook recursions") {
  const std::size_t n = 3000;
  const auto x = oracle::WhiteNoise(n, 21, 0.3);
  const auto path = std::vector<double>{0.5, -0.3, 0.2, 0.1};
  const auto d = oracle::Convolve(path, x);
  for (LmsMode mode : {LmsMode::kPlain, LmsMode::kNlms}) {
    CAPTURE(LmsModeName(mode));
    LmsConfig cfg;
    cfg.taps = 8;
    cfg.mode = mode;
    cfg.step_size = mode == LmsMode::kPlain ? 0.05 : 0.5;
    LmsFilter f(cfg);
    std::vector<double> h(8, 0.0), xv(8, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (int k = 7; k > 0; --k) xv[k] = xv[k - 1];
      xv[0] = x[i];
      double y = 0.0, xx = 0.0;
      for (int k = 0; k < 8; ++k) {
        y += h[k] * xv[k];
        xx += xv[k] * xv[k];
      }
      const double e = d[i] - y;
      const double g = mode == LmsMode::kPlain ? cfg.step_size * e
                                               : cfg.step_size * e / (cfg.epsilon + xx);
      for (int k = 0; k < 8; ++k) h[k] += g * xv[k];
      REQUIRE(f.Step(x[i], d[i]) == doctest::Approx(e).epsilon(1e-9));
    }
    for (int k = 0; k < 4; ++k) CHECK(f.weights()[k] == doctest::Approx(path[k]).epsilon(1e-3));
  }
}

TEST_CASE("divergence is reported with the sample index") {
  LmsConfig cfg;
  cfg.taps = 4;
  cfg.mode = LmsMode::kPlain;
  cfg.step_size = 50.0;
  LmsFilter f(cfg);
  const auto x = oracle::WhiteNoise(5000, 2, 10.0);
  bool thrown = false;
  try {
    for (double v : x) f.Step(v, v);
  } catch (const DivergenceError& e) {
    thrown = true;
    CHECK(e.code() == ErrorCode::kDivergence);
    CHECK(e.sample_index() < x.size());
  }
  CHECK(thrown);
}

TEST_CASE("LMS configuration validation") {
  LmsConfig bad;
  bad.taps = 0;
  CHECK_THROWS_AS(LmsFilter{bad}, Error);
  bad = {};
  bad.step_size = -1.0;
  CHECK_THROWS_AS(LmsFilter{bad}, Error);
  bad = {};
  bad.delay = -1;
  CHECK_THROWS_AS(LmsFilter{bad}, Error);
}

TEST_CASE("ANS with a silent reference is the delayed band-passed IEM") {
  AnsConfig cfg;
  const double fs = 8000.0;
  const BreathingSignal breath = GenerateBreathing(15.0, 8.0, fs, 4);
  const std::vector<double> silent(breath.audio.size(), 0.0);
  AnsProcessor ans(cfg, fs);
  std::vector<double> out(silent.size());
  ans.Process(breath.audio.samples, silent, out);
  BiquadCascade bp = DesignBandpass(200.0, 1000.0, fs, 4);
  const auto ref = bp.Process(breath.audio.samples);
  const int k = cfg.lms.delay;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double expected = i >= static_cast<std::size_t>(k) ? ref[i - k] : 0.0;
    REQUIRE(out[i] == doctest::Approx(expected).epsilon(1e-12));
  }
  CHECK(ans.declared_delay_samples() ==
        doctest::Approx(k + bp.GroupDelay(std::sqrt(200.0 * 1000.0), fs)));
}

TEST_CASE("ANS cancels path-filtered reference noise") {
  SynthScenario sc;
  sc.duration_s = 30.0;
  sc.seed = 31;
  const ScenarioSignals s = GenerateScenario(sc);
  AnsProcessor ans(AnsConfig{}, sc.fs_hz);
  std::vector<double> out(s.iem.size());
  ans.Process(s.iem.samples, s.oem.samples, out);
  const std::size_t half = out.size() / 2;
  CHECK(oracle::Db(oracle::Energy(out, half) / oracle::Energy(s.iem.samples, half)) <= -15.0);

  // Correlation with the breath: compare against the delayed, band-passed
  // clean component, which is what a perfect canceller would emit.
  BiquadCascade bp = DesignBandpass(200.0, 1000.0, sc.fs_hz, 4);
  const auto ref = bp.Process(s.clean_breath.samples);
  const int k = AnsConfig{}.lms.delay;
  std::vector<double> ref_delayed(ref.size(), 0.0);
  for (std::size_t i = k; i < ref.size(); ++i) ref_delayed[i] = ref[i - k];
  const std::span<const double> o(out.data() + half, out.size() - half);
  const std::span<const double> r(ref_delayed.data() + half, out.size() - half);
  const std::span<const double> in(s.iem.samples.data() + half - k, out.size() - half);
  CHECK(oracle::Pearson(o, r) > oracle::Pearson(in, std::span(s.clean_breath.samples).subspan(half - k, out.size() - half)));
}

TEST_CASE("ANS leaves uncorrelated noise alone") {
  const double fs = 8000.0;
  const std::size_t n = static_cast<std::size_t>(30 * fs);
  const auto iem = oracle::WhiteNoise(n, 41, 0.1);
  const auto oem = oracle::WhiteNoise(n, 42, 0.1);
  AnsConfig cfg;
  AnsProcessor ans(cfg, fs);
  std::vector<double> out(n);
  ans.Process(iem, oem, out);
  // Against the band-pass-only output, so only the adaptive stage is judged.
  cfg.adaptive = false;
  AnsProcessor baseline(cfg, fs);
  std::vector<double> bp(n);
  baseline.Process(iem, oem, bp);
  CHECK(std::abs(oracle::Db(oracle::Energy(out, n / 2) / oracle::Energy(bp, n / 2))) <= 1.0);
}

TEST_CASE("ANS stream processing") {
  SynthScenario sc;
  sc.duration_s = 5.0;
  const ScenarioSignals s = GenerateScenario(sc);
  const auto iem = SplitBlocks(s.iem, 24);
  const auto oem = SplitBlocks(s.oem, 24);
  const SampleBlock joined = JoinBlocks(AnsProcess(iem, oem, AnsConfig{}));
  AnsProcessor ans(AnsConfig{}, sc.fs_hz);
  std::vector<double> whole(s.iem.size());
  ans.Process(s.iem.samples, s.oem.samples, whole);
  CHECK(joined.samples == whole);

  SUBCASE("mismatched block counts") {
    const auto short_oem = SplitBlocks(SampleBlock{std::vector<double>(48, 0.0), sc.fs_hz}, 24);
    try {
      AnsProcess(iem, short_oem, AnsConfig{});
      FAIL("expected an alignment error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kAlignment);
    }
  }
  SUBCASE("mismatched block lengths") {
    std::vector<double> out(10);
    std::vector<double> a(10), b(9);
    try {
      ans.Process(a, b, out);
      FAIL("expected an alignment error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::kAlignment);
    }
  }
}
