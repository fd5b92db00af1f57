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

#include "earresp/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "earresp/error.hpp"

namespace earresp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void RequirePaired(std::span<const double> a, std::span<const double> b,
                   std::size_t minimum) {
  Require(a.size() == b.size(), "estimate and truth lengths differ");
  Require(a.size() >= minimum, "not enough values (need at least " +
                                   std::to_string(minimum) + ")");
}

double Mean(std::span<const double> x) {
  double sum = 0.0;
  for (double v : x) sum += v;
  return sum / static_cast<double>(x.size());
}

double SampleVariance(std::span<const double> x) {
  const double m = Mean(x);
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

}  // namespace

ErrorMetrics ComputeErrorMetrics(std::span<const double> estimates,
                                 std::span<const double> truth) {
  RequirePaired(estimates, truth, 1);
  double abs_sum = 0.0, sq_sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const double e = estimates[i] - truth[i];
    abs_sum += std::abs(e);
    sq_sum += e * e;
  }
  const auto n = static_cast<double>(estimates.size());
  return {abs_sum / n, std::sqrt(sq_sum / n)};
}

double NoiseReductionDb(std::span<const double> cleaned,
                        std::span<const double> original) {
  Require(cleaned.size() == original.size(),
          "cleaned and original lengths differ");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < cleaned.size(); ++i) {
    num += cleaned[i] * cleaned[i];
    den += original[i] * original[i];
  }
  if (!(den > 0.0)) {
    Fail(ErrorCode::kUndefinedMetric,
         "noise reduction undefined: original signal has zero energy");
  }
  return 10.0 * std::log10(num / den);
}

double PearsonCorrelation(std::span<const double> x,
                          std::span<const double> y) {
  Require(x.size() == y.size(), "correlation inputs differ in length");
  if (x.size() < 2) {
    Fail(ErrorCode::kUndefinedMetric, "correlation needs at least 2 samples");
  }
  const double mx = Mean(x), my = Mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (!(sxx > 0.0) || !(syy > 0.0)) {
    Fail(ErrorCode::kUndefinedMetric, "correlation undefined: zero variance");
  }
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> EnergyEnvelope(std::span<const double> y, int k) {
  Require(k >= 1, "envelope length must be positive");
  std::vector<double> e(y.size(), 0.0);
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t t = 0; t < y.size(); ++t) {
    const std::size_t first = t + 1 >= kk ? t + 1 - kk : 0;
    double sum = 0.0;
    for (std::size_t i = first; i <= t; ++i) sum += y[i] * y[i];
    e[t] = sum / k;
  }
  return e;
}

std::vector<double> SecantSlope(std::span<const double> g, int k) {
  Require(k >= 1, "secant lag must be positive");
  std::vector<double> s(g.size(), 0.0);
  const auto kk = static_cast<std::size_t>(k);
  for (std::size_t t = kk; t < g.size(); ++t) {
    s[t] = std::abs(g[t] - g[t - kk]) / k;
  }
  return s;
}

double RiIndex(const SampleBlock& audio, const BeltSignal& belt, int k) {
  Require(audio.sample_rate_hz > 0.0 && belt.sample_rate_hz > 0.0,
          "sample rates must be positive");
  const std::vector<double> envelope = EnergyEnvelope(audio.samples, k);
  const std::vector<double> slope = SecantSlope(belt.samples, k);
  const double ratio = audio.sample_rate_hz / belt.sample_rate_hz;
  std::vector<double> x, y;
  for (std::size_t j = static_cast<std::size_t>(k); j < belt.size(); ++j) {
    const auto a = static_cast<long long>(std::llround(j * ratio));
    if (a < k - 1) continue;
    if (a >= static_cast<long long>(audio.size())) break;
    x.push_back(envelope[static_cast<std::size_t>(a)]);
    y.push_back(slope[j]);
  }
  return PearsonCorrelation(x, y);
}

double Median(std::span<const double> values) {
  Require(!values.empty(), "median of an empty series");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

MadInterval ComputeMadInterval(std::span<const double> errors) {
  MadInterval out;
  out.median = Median(errors);
  std::vector<double> deviations;
  deviations.reserve(errors.size());
  for (double e : errors) deviations.push_back(std::abs(e - out.median));
  out.sigma = 1.4826 * Median(deviations);
  out.low = out.median - 3.0 * out.sigma;
  out.high = out.median + 3.0 * out.sigma;
  double abs_sum = 0.0;
  for (double e : errors) {
    if (e >= out.low && e <= out.high) {
      ++out.inliers;
      abs_sum += std::abs(e);
    }
  }
  out.inlier_fraction =
      static_cast<double>(out.inliers) / static_cast<double>(errors.size());
  out.inlier_mae =
      out.inliers > 0 ? abs_sum / static_cast<double>(out.inliers) : kNaN;
  return out;
}

VarianceComponents DecomposeVariance(
    const std::map<std::string, std::vector<double>>& errors_by_subject) {
  if (errors_by_subject.size() < 2) {
    Fail(ErrorCode::kDegenerate, "generalizability needs at least 2 subjects");
  }
  std::vector<double> means;
  double within_sum = 0.0;
  for (const auto& [subject, errors] : errors_by_subject) {
    if (errors.size() < 2) {
      Fail(ErrorCode::kDegenerate,
           "subject '" + subject + "' has fewer than 2 values");
    }
    means.push_back(Mean(errors));
    within_sum += SampleVariance(errors);
  }
  return {SampleVariance(means),
          within_sum / static_cast<double>(errors_by_subject.size())};
}

double GeneralizabilityRatio(double between, double within) {
  Require(between >= 0.0 && within >= 0.0,
          "variance components must be non-negative");
  if (!(between + within > 0.0)) {
    Fail(ErrorCode::kDegenerate, "total error variance is zero");
  }
  return between / (between + within);
}

double GeneralizabilityRatio(
    const std::map<std::string, std::vector<double>>& errors_by_subject) {
  const VarianceComponents c = DecomposeVariance(errors_by_subject);
  return GeneralizabilityRatio(c.between, c.within);
}

BlandAltman ComputeBlandAltman(std::span<const double> estimates,
                               std::span<const double> truth) {
  RequirePaired(estimates, truth, 2);
  std::vector<double> diff(estimates.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = estimates[i] - truth[i];
  }
  BlandAltman ba;
  ba.bias = Mean(diff);
  ba.sd = std::sqrt(SampleVariance(diff));
  ba.loa_low = ba.bias - 1.96 * ba.sd;
  ba.loa_high = ba.bias + 1.96 * ba.sd;
  return ba;
}

bool IsEvaluable(const WindowRecord& record) {
  return record.gt_valid && record.gt_cpm.has_value() &&
         record.rr_fused.has_value();
}

std::vector<SweepRow> ThresholdSweep(std::span<const WindowRecord> records,
                                     std::span<const double> tau_grid) {
  std::vector<const WindowRecord*> usable;
  for (const WindowRecord& r : records) {
    if (IsEvaluable(r)) usable.push_back(&r);
  }
  std::vector<SweepRow> rows;
  for (double tau : tau_grid) {
    Require(tau >= 0.0, "sweep thresholds must be non-negative");
    std::vector<double> est, truth;
    for (const WindowRecord* r : usable) {
      if (r->discrepancy && *r->discrepancy < tau) {
        est.push_back(*r->rr_fused);
        truth.push_back(*r->gt_cpm);
      }
    }
    SweepRow row;
    row.tau = tau;
    row.retained = est.size();
    row.retained_fraction =
        usable.empty() ? 0.0
                       : static_cast<double>(est.size()) /
                             static_cast<double>(usable.size());
    if (est.empty()) {
      row.mae = row.rmse = kNaN;
    } else {
      const ErrorMetrics m = ComputeErrorMetrics(est, truth);
      row.mae = m.mae;
      row.rmse = m.rmse;
    }
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> ParseTauGrid(const std::string& text) {
  auto parse = [&](const std::string& token) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(token, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != token.size()) {
      Fail(ErrorCode::kParameter, "bad threshold value '" + token + "'");
    }
    return v;
  };

  std::vector<double> grid;
  if (text.find(':') != std::string::npos) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
    Require(parts.size() == 3, "threshold range must be start:step:stop");
    const double start = parse(parts[0]);
    const double step = parse(parts[1]);
    const double stop = parse(parts[2]);
    Require(step > 0.0 && stop >= start, "threshold range must increase");
    const auto count =
        static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
    for (std::size_t i = 0; i < count; ++i) {
      grid.push_back(start + static_cast<double>(i) * step);
    }
  } else {
    std::stringstream ss(text);
    for (std::string part; std::getline(ss, part, ',');) {
      grid.push_back(parse(part));
    }
  }
  Require(!grid.empty(), "threshold grid is empty");
  return grid;
}

EvalReport BuildReport(std::span<const LabeledRecords> sessions, double tau_cpm,
                       std::optional<double> nr_db, std::optional<double> ri) {
  EvalReport report;
  report.tau_cpm = tau_cpm;
  report.nr_db = nr_db.value_or(kNaN);
  report.ri = ri.value_or(kNaN);

  std::vector<double> est, truth, errors;
  std::vector<double> conf_est, conf_truth;
  std::map<std::string, std::vector<double>> by_subject;
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>>
      subject_pairs, condition_pairs;

  for (const LabeledRecords& session : sessions) {
    std::vector<WindowRecord> records = session.records;
    RejectOutliers(records, tau_cpm);
    report.windows_total += records.size();
    for (const WindowRecord& r : records) {
      if (!IsEvaluable(r)) continue;
      est.push_back(*r.rr_fused);
      truth.push_back(*r.gt_cpm);
      errors.push_back(*r.rr_fused - *r.gt_cpm);
      by_subject[session.subject].push_back(errors.back());
      subject_pairs[session.subject].first.push_back(*r.rr_fused);
      subject_pairs[session.subject].second.push_back(*r.gt_cpm);
      condition_pairs[session.condition].first.push_back(*r.rr_fused);
      condition_pairs[session.condition].second.push_back(*r.gt_cpm);
      if (r.accepted) {
        conf_est.push_back(*r.rr_fused);
        conf_truth.push_back(*r.gt_cpm);
      }
    }
  }
  report.windows_evaluated = est.size();

  if (!est.empty()) {
    const ErrorMetrics m = ComputeErrorMetrics(est, truth);
    report.mae_cpm = m.mae;
    report.rmse_cpm = m.rmse;
    const MadInterval mad = ComputeMadInterval(errors);
    report.mad_sigma = mad.sigma;
    report.mad_low_cpm = mad.low;
    report.mad_high_cpm = mad.high;
    report.mad_inlier_fraction = mad.inlier_fraction;
    report.mad_inlier_mae_cpm = mad.inlier_mae;
    report.retained_fraction = static_cast<double>(conf_est.size()) /
                               static_cast<double>(est.size());
  } else {
    report.mae_cpm = report.rmse_cpm = kNaN;
    report.mad_sigma = report.mad_low_cpm = report.mad_high_cpm = kNaN;
    report.mad_inlier_fraction = report.mad_inlier_mae_cpm = kNaN;
    report.retained_fraction = kNaN;
  }
  if (est.size() >= 2) {
    const BlandAltman ba = ComputeBlandAltman(est, truth);
    report.bias_cpm = ba.bias;
    report.loa_low_cpm = ba.loa_low;
    report.loa_high_cpm = ba.loa_high;
  } else {
    report.bias_cpm = est.empty() ? kNaN : errors.front();
    report.loa_low_cpm = report.loa_high_cpm = kNaN;
  }
  if (!conf_est.empty()) {
    const ErrorMetrics m = ComputeErrorMetrics(conf_est, conf_truth);
    report.mae_confident_cpm = m.mae;
    report.rmse_confident_cpm = m.rmse;
  } else {
    report.mae_confident_cpm = report.rmse_confident_cpm = kNaN;
  }
  try {
    report.g_ratio = GeneralizabilityRatio(by_subject);
  } catch (const Error&) {
    report.g_ratio = kNaN;
  }

  auto groups = [](const auto& pairs) {
    std::map<std::string, GroupMetrics> out;
    for (const auto& [label, p] : pairs) {
      const ErrorMetrics m = ComputeErrorMetrics(p.first, p.second);
      out[label] = {p.first.size(), m.mae, m.rmse};
    }
    return out;
  };
  report.per_subject = groups(subject_pairs);
  report.per_condition = groups(condition_pairs);
  return report;
}

}  // namespace earresp
