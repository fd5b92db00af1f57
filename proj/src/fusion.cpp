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

#include "earresp/fusion.hpp"

#include <cmath>
#include <map>

#include "earresp/error.hpp"

namespace earresp {

double Fuse(double rr_left, double rr_right) {
  Require(std::isfinite(rr_left) && std::isfinite(rr_right) && rr_left > 0.0 &&
              rr_right > 0.0,
          "fusion needs two finite, positive rates");
  return rr_left / 2.0 + rr_right / 2.0;
}

double Discrepancy(double rr_left, double rr_right) {
  Require(std::isfinite(rr_left) && std::isfinite(rr_right),
          "discrepancy needs two finite rates");
  return std::abs(rr_left - rr_right);
}

WindowRecord MakeRecord(int window_index, double start_s,
                        std::optional<double> rr_left,
                        std::optional<double> rr_right) {
  WindowRecord r;
  r.window_index = window_index;
  r.start_s = start_s;
  r.rr_left = rr_left;
  r.rr_right = rr_right;
  if (rr_left && rr_right) {
    r.rr_fused = Fuse(*rr_left, *rr_right);
    r.discrepancy = Discrepancy(*rr_left, *rr_right);
  }
  return r;
}

std::vector<WindowRecord> JoinChannels(std::span<const WindowEstimate> left,
                                       std::span<const WindowEstimate> right) {
  struct Pair {
    double start_s = 0.0;
    std::optional<double> l, r;
  };
  std::map<int, Pair> by_index;
  for (const WindowEstimate& w : left) {
    Pair& p = by_index[w.window_index];
    p.start_s = w.start_s;
    if (w.valid) p.l = w.estimate.rate_cpm;
  }
  for (const WindowEstimate& w : right) {
    Pair& p = by_index[w.window_index];
    p.start_s = w.start_s;
    if (w.valid) p.r = w.estimate.rate_cpm;
  }
  std::vector<WindowRecord> records;
  records.reserve(by_index.size());
  for (const auto& [index, p] : by_index) {
    records.push_back(MakeRecord(index, p.start_s, p.l, p.r));
  }
  return records;
}

void AttachGroundTruth(std::span<WindowRecord> records,
                       std::span<const GroundTruth> truth) {
  std::map<int, const GroundTruth*> by_index;
  for (const GroundTruth& gt : truth) by_index[gt.window_index] = &gt;
  for (WindowRecord& r : records) {
    const auto it = by_index.find(r.window_index);
    if (it == by_index.end()) continue;
    if (it->second->has_peak) r.gt_cpm = it->second->rate_cpm;
    r.gt_valid = it->second->valid;
  }
}

double RejectOutliers(std::span<WindowRecord> records, double tau_cpm) {
  Require(tau_cpm >= 0.0, "rejection threshold must be non-negative");
  if (records.empty()) return 0.0;
  std::size_t kept = 0;
  for (WindowRecord& r : records) {
    r.accepted = r.discrepancy.has_value() && *r.discrepancy < tau_cpm;
    if (r.accepted) ++kept;
  }
  return static_cast<double>(kept) / static_cast<double>(records.size());
}

}  // namespace earresp
