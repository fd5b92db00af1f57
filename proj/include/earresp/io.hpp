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

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "earresp/dsp.hpp"
#include "earresp/evaluation.hpp"
#include "earresp/fusion.hpp"
#include "earresp/ground_truth.hpp"
#include "earresp/respiration.hpp"

namespace earresp {

// --- PCM wave container ----------------------------------------------------

enum class WavEncoding { kPcm16, kPcm24, kFloat32 };

// Mono 16/24-bit integer PCM or 32-bit float. Integer samples are scaled by
// 1/2^(bits-1). Malformed or truncated input raises FormatError.
SampleBlock ParseWav(std::span<const std::uint8_t> bytes);
SampleBlock ReadWav(const std::string& path);

std::vector<std::uint8_t> EncodeWav(const SampleBlock& block,
                                    WavEncoding encoding);
void WriteWav(const SampleBlock& block, const std::string& path,
              WavEncoding encoding = WavEncoding::kFloat32);

// --- Window records (CSV) ---------------------------------------------------

inline constexpr const char* kRecordsHeader =
    "window_index,start_s,rr_left,rr_right,rr_fused,discrepancy,accepted,"
    "gt_cpm,gt_valid";

// Reals with 4 decimals; missing values are empty fields.
void WriteRecords(std::span<const WindowRecord> records, std::ostream& out);
void WriteRecordsFile(std::span<const WindowRecord> records,
                      const std::string& path);
std::vector<WindowRecord> ReadRecords(std::istream& in);
std::vector<WindowRecord> ReadRecordsFile(const std::string& path);

// --- Reports ----------------------------------------------------------------

// Key-value text with sections: [report], [per_subject.<label>],
// [per_condition.<label>]. Every scalar EvalReport field appears once.
void WriteReport(const EvalReport& report, std::ostream& out);
void WriteReportFile(const EvalReport& report, const std::string& path);
std::vector<std::string> ReportFieldNames();
// Scalar report field by name; parameter error for unknown names.
double ReportValue(const EvalReport& report, const std::string& name);

void WriteSweep(std::span<const SweepRow> rows, std::ostream& out);
void WriteSweepFile(std::span<const SweepRow> rows, const std::string& path);

std::string FormatReal(double value);

// --- Configuration ----------------------------------------------------------

struct PipelineConfig {
  double ans_rate_hz = 8000.0;
  AnsConfig ans;
  RrConfig rr;
  GroundTruthConfig ground_truth;
  double tau_cpm = kDefaultTauCpm;
  int ri_k = 100;
};

// Keys are "section.name", e.g. "ans.step_size" or "windows.overlap".
void SetConfigValue(PipelineConfig& config, const std::string& key,
                    const std::string& value);
std::string GetConfigValue(const PipelineConfig& config, const std::string& key);
std::vector<std::string> ConfigKeys();

// Reads "key = value" lines grouped under [section] headers; unknown keys are
// a parameter error.
void LoadConfigFile(PipelineConfig& config, const std::string& path);
void LoadConfigText(PipelineConfig& config, const std::string& text);
void WriteConfig(const PipelineConfig& config, std::ostream& out);

// --- Session manifest --------------------------------------------------------

// One recording session: per-ear IEM/OEM files plus an optional belt.
// Relative paths are resolved against the manifest's directory.
struct SessionManifest {
  std::string subject = "S01";
  std::string condition = "unknown";
  std::string left_iem, left_oem, right_iem, right_oem, belt;
  double sample_rate_hz = 8000.0;
  double belt_rate_hz = kDefaultBeltRateHz;
  // "section.key" = value pairs applied on top of the pipeline config.
  std::vector<std::pair<std::string, std::string>> overrides;
};

// Parses [session] and optional [config] sections. Checks that every named
// file exists and that each file's rate matches its declared rate.
SessionManifest LoadManifest(const std::string& path);
SessionManifest ParseManifest(const std::string& text,
                              const std::string& base_dir);
void WriteManifest(const SessionManifest& manifest, const std::string& path);
void ApplyOverrides(const SessionManifest& manifest, PipelineConfig& config);

}  // namespace earresp
