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

#include "earresp/fft.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "earresp/error.hpp"

namespace earresp {

namespace {

// The FFTW planner is not thread-safe; execution on distinct plans is.
std::mutex& PlannerMutex() {
  static std::mutex mutex;
  return mutex;
}

}  // namespace

struct RealFft::Impl {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  fftw_plan plan = nullptr;

  ~Impl() {
    std::lock_guard<std::mutex> lock(PlannerMutex());
    if (plan) fftw_destroy_plan(plan);
    fftw_free(in);
    fftw_free(out);
  }
};

RealFft::RealFft(std::size_t size) : size_(size), impl_(new Impl) {
  Require(size >= 1, "FFT size must be positive");
  std::lock_guard<std::mutex> lock(PlannerMutex());
  impl_->in = fftw_alloc_real(size);
  impl_->out = fftw_alloc_complex(size / 2 + 1);
  impl_->plan = fftw_plan_dft_r2c_1d(static_cast<int>(size), impl_->in,
                                     impl_->out, FFTW_ESTIMATE);
  if (!impl_->plan) Fail(ErrorCode::kParameter, "FFTW planning failed");
}

RealFft::~RealFft() = default;
RealFft::RealFft(RealFft&&) noexcept = default;
RealFft& RealFft::operator=(RealFft&&) noexcept = default;

std::span<const std::complex<double>> RealFft::Transform(
    std::span<const double> input) {
  Require(input.size() <= size_, "FFT input longer than the transform size");
  std::copy(input.begin(), input.end(), impl_->in);
  std::fill(impl_->in + input.size(), impl_->in + size_, 0.0);
  fftw_execute(impl_->plan);
  // fftw_complex is layout-compatible with std::complex<double>.
  return {reinterpret_cast<const std::complex<double>*>(impl_->out), bins()};
}

std::vector<double> HammingWindow(std::size_t size) {
  std::vector<double> w(size, 1.0);
  if (size < 2) return w;
  const double denom = static_cast<double>(size - 1);
  for (std::size_t n = 0; n < size; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / denom);
  }
  return w;
}

std::size_t NextPowerOfTwo(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace earresp
