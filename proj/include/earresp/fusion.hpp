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

#include <optional>
#include <span>
#include <vector>

#include "earresp/ground_truth.hpp"
#include "earresp/respiration.hpp"

namespace earresp {

// Per-analysis-window join of both ears, the fused estimate and the
// reference. rr_fused and discrepancy are present iff both ears are.
struct WindowRecord {
  int window_index = 0;
  double start_s = 0.0;
  std::optional<double> rr_left;
  std::optional<double> rr_right;
  std::optional<double> rr_fused;
  std::optional<double> discrepancy;
  bool accepted = false;
  std::optional<double> gt_cpm;
  bool gt_valid = false;
};

// Equal-weight fusion, left/2 + right/2.
double Fuse(double rr_left, double rr_right);
// |left - right|
double Discrepancy(double rr_left, double rr_right);

WindowRecord MakeRecord(int window_index, double start_s,
                        std::optional<double> rr_left,
                        std::optional<double> rr_right);

// Joins per-ear window estimates by window index; invalid estimates become
// missing channels.
std::vector<WindowRecord> JoinChannels(std::span<const WindowEstimate> left,
                                       std::span<const WindowEstimate> right);

// Sets gt_cpm/gt_valid on records whose window index has a reference.
void AttachGroundTruth(std::span<WindowRecord> records,
                       std::span<const GroundTruth> truth);

// accepted = discrepancy < tau (strict). Records without a discrepancy are
// never accepted. Nothing is removed. Returns the retained fraction.
double RejectOutliers(std::span<WindowRecord> records, double tau_cpm);

inline constexpr double kDefaultTauCpm = 0.52;

}  // namespace earresp
