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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "earresp/dsp.hpp"
#include "earresp/fusion.hpp"
#include "earresp/ground_truth.hpp"

namespace earresp {

struct ErrorMetrics {
  double mae = 0.0;
  double rmse = 0.0;
};

ErrorMetrics ComputeErrorMetrics(std::span<const double> estimates,
                                 std::span<const double> truth);

// 10 log10(sum cleaned^2 / sum original^2); negative means suppression.
double NoiseReductionDb(std::span<const double> cleaned,
                        std::span<const double> original);

double PearsonCorrelation(std::span<const double> x, std::span<const double> y);

// E_y(t) = (1/K) sum_{k<K} y^2(t-k), defined for t >= K-1 (earlier entries
// use the samples available).
std::vector<double> EnergyEnvelope(std::span<const double> y, int k);
// s_g(t) = |g(t) - g(t-K)| / K, defined for t >= K (earlier entries are 0).
std::vector<double> SecantSlope(std::span<const double> g, int k);

// Respiratory information index: correlation between the audio energy
// envelope (K audio samples) and the belt secant slope (K belt samples). The
// envelope is sampled at the nearest audio sample of each belt sample.
double RiIndex(const SampleBlock& audio, const BeltSignal& belt, int k = 100);

struct MadInterval {
  double median = 0.0;
  double sigma = 0.0;  // 1.4826 * MAD
  double low = 0.0;
  double high = 0.0;
  std::size_t inliers = 0;
  double inlier_fraction = 0.0;
  double inlier_mae = 0.0;  // mean |x| over inliers
};

double Median(std::span<const double> values);
MadInterval ComputeMadInterval(std::span<const double> errors);

struct VarianceComponents {
  double between = 0.0;  // sample variance of subject means
  double within = 0.0;   // mean of per-subject sample variances
};

VarianceComponents DecomposeVariance(
    const std::map<std::string, std::vector<double>>& errors_by_subject);
double GeneralizabilityRatio(double between, double within);
double GeneralizabilityRatio(
    const std::map<std::string, std::vector<double>>& errors_by_subject);

struct BlandAltman {
  double bias = 0.0;
  double sd = 0.0;  // n-1 denominator
  double loa_low = 0.0;
  double loa_high = 0.0;
};

BlandAltman ComputeBlandAltman(std::span<const double> estimates,
                               std::span<const double> truth);

struct SweepRow {
  double tau = 0.0;
  double mae = 0.0;   // NaN when nothing is retained
  double rmse = 0.0;  // NaN when nothing is retained
  double retained_fraction = 0.0;
  std::size_t retained = 0;
};

// Records count when they carry a valid reference and a fused estimate.
bool IsEvaluable(const WindowRecord& record);

std::vector<SweepRow> ThresholdSweep(std::span<const WindowRecord> records,
                                     std::span<const double> tau_grid);

// "start:step:stop" (inclusive) or a comma-separated list.
std::vector<double> ParseTauGrid(const std::string& text);

struct LabeledRecords {
  std::string subject;
  std::string condition;
  std::vector<WindowRecord> records;
};

struct GroupMetrics {
  std::size_t windows = 0;
  double mae = 0.0;
  double rmse = 0.0;
};

// Summary over every evaluable window. Fields that cannot be computed from
// the inputs are NaN.
struct EvalReport {
  std::size_t windows_total = 0;
  std::size_t windows_evaluated = 0;
  double mae_cpm = 0.0;
  double rmse_cpm = 0.0;
  double bias_cpm = 0.0;
  double loa_low_cpm = 0.0;
  double loa_high_cpm = 0.0;
  double nr_db = 0.0;
  double ri = 0.0;
  double mad_sigma = 0.0;
  double mad_low_cpm = 0.0;
  double mad_high_cpm = 0.0;
  double mad_inlier_fraction = 0.0;
  double mad_inlier_mae_cpm = 0.0;
  double g_ratio = 0.0;
  double tau_cpm = 0.0;
  double retained_fraction = 0.0;
  double mae_confident_cpm = 0.0;
  double rmse_confident_cpm = 0.0;
  std::map<std::string, GroupMetrics> per_condition;
  std::map<std::string, GroupMetrics> per_subject;
};

// Recomputes acceptance at tau_cpm on a copy of the records.
EvalReport BuildReport(std::span<const LabeledRecords> sessions, double tau_cpm,
                       std::optional<double> nr_db = std::nullopt,
                       std::optional<double> ri = std::nullopt);

}  // namespace earresp
