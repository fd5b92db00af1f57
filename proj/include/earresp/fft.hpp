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
#include <memory>
#include <span>
#include <vector>

namespace earresp {

// Real-input forward FFT of a fixed length, backed by FFTW. Instances own
// their plan and buffers; Transform() is safe to call concurrently on
// different instances.
class RealFft {
 public:
  explicit RealFft(std::size_t size);
  ~RealFft();
  RealFft(RealFft&&) noexcept;
  RealFft& operator=(RealFft&&) noexcept;
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return size_; }
  std::size_t bins() const { return size_ / 2 + 1; }

  // input.size() may be shorter than size(); the rest is zero-padded.
  // Returns the size()/2 + 1 one-sided bins.
  std::span<const std::complex<double>> Transform(std::span<const double> input);

 private:
  struct Impl;
  std::size_t size_;
  std::unique_ptr<Impl> impl_;
};

// Symmetric Hamming window, w[n] = 0.54 - 0.46 cos(2 pi n / (N - 1)).
std::vector<double> HammingWindow(std::size_t size);

std::size_t NextPowerOfTwo(std::size_t n);

}  // namespace earresp
