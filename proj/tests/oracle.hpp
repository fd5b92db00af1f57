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

// Reference computations for tests. Everything here is written directly from
// the defining formulas, without calling into the library.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace oracle {

inline std::vector<double> Sine(double freq_hz, double fs_hz, std::size_t n,
                                 double amplitude = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = amplitude *
           std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / fs_hz + phase);
  }
  return x;
}

inline std::vector<double> WhiteNoise(std::size_t n, unsigned seed, double sigma = 1.0) {
  std::mt19937 rng(seed);
  std::normal_distribution<double> dist(0.0, sigma);
  std::vector<double> x(n);
  for (double& v : x) v = dist(rng);
  return x;
}

inline double Energy(std::span<const double> x, std::size_t from = 0) {
  double s = 0.0;
  for (std::size_t i = from; i < x.size(); ++i) s += x[i] * x[i];
  return s;
}

inline double Rms(std::span<const double> x, std::size_t from = 0) {
  return std::sqrt(Energy(x, from) / static_cast<double>(x.size() - from));
}

inline double Db(double ratio) { return 10.0 * std::log10(ratio); }

// |X(f)| at an arbitrary frequency by a direct sum.
inline double DftMagnitude(std::span<const double> x, double freq_hz, double fs_hz) {
  std::complex<double> acc = 0.0;
  for (std::size_t n = 0; n < x.size(); ++n) {
    acc += x[n] * std::polar(1.0, -2.0 * std::numbers::pi * freq_hz * n / fs_hz);
  }
  return std::abs(acc);
}

inline std::vector<double> Convolve(std::span<const double> h, std::span<const double> x) {
  std::vector<double> y(x.size(), 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    for (std::size_t k = 0; k < h.size() && k <= n; ++k) y[n] += h[k] * x[n - k];
  }
  return y;
}

// Analog Butterworth magnitudes at the bilinear-prewarped frequency.
inline double Warp(double f, double fs) {
  return 2.0 * fs * std::tan(std::numbers::pi * f / fs);
}

inline double ButterLowpassDb(double f, double fc, double fs, int order) {
  const double r = Warp(f, fs) / Warp(fc, fs);
  return -10.0 * std::log10(1.0 + std::pow(r, 2.0 * order));
}

inline double ButterHighpassDb(double f, double fc, double fs, int order) {
  const double r = Warp(fc, fs) / Warp(f, fs);
  return -10.0 * std::log10(1.0 + std::pow(r, 2.0 * order));
}

// order is the digital band-pass order (twice the prototype order).
inline double ButterBandpassDb(double f, double lo, double hi, double fs, int order) {
  const double w = Warp(f, fs), w1 = Warp(lo, fs), w2 = Warp(hi, fs);
  const double r = (w * w - w1 * w2) / ((w2 - w1) * w);
  return -10.0 * std::log10(1.0 + std::pow(r * r, order / 2));
}

inline double Mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

// Sample variance, n - 1 denominator.
inline double Variance(std::span<const double> x) {
  const double m = Mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

inline double Pearson(std::span<const double> x, std::span<const double> y) {
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Median by full sort.
inline double Median(std::vector<double> x) {
  std::sort(x.begin(), x.end());
  const std::size_t n = x.size();
  return n % 2 ? x[n / 2] : 0.5 * (x[n / 2 - 1] + x[n / 2]);
}

inline double RelativeError(double actual, double expected) {
  const double scale = std::max(std::abs(expected), 1e-300);
  return std::abs(actual - expected) / scale;
}

}  // namespace oracle
