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

#include "earresp/earresp.h"

#include <cmath>
#include <cstring>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <new>
#include <string>
#include <vector>

#include "earresp/dsp.hpp"
#include "earresp/error.hpp"
#include "earresp/evaluation.hpp"
#include "earresp/fusion.hpp"
#include "earresp/ground_truth.hpp"
#include "earresp/io.hpp"
#include "earresp/respiration.hpp"
#include "earresp/synth.hpp"

struct earresp_config {
  earresp::PipelineConfig value;
};

struct earresp_audio {
  earresp::SampleBlock value;
};

struct earresp_ans {
  earresp::AnsProcessor value;
};

struct earresp_records {
  std::vector<earresp::WindowRecord> value;
};

struct earresp_report {
  earresp::EvalReport value;
};

struct earresp_manifest {
  earresp::SessionManifest value;
};

namespace {

thread_local std::string g_last_error;

earresp_status Translate(const earresp::Error& e) {
  g_last_error = e.what();
  return static_cast<earresp_status>(static_cast<int>(e.code()));
}

// Runs fn, mapping exceptions onto status codes and the thread's message.
template <typename Fn>
earresp_status Guard(Fn&& fn) {
  try {
    fn();
    g_last_error.clear();
    return EARRESP_OK;
  } catch (const earresp::Error& e) {
    return Translate(e);
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return EARRESP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return EARRESP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return EARRESP_ERR_INTERNAL;
  }
}

void NotNull(const void* p, const char* name) {
  earresp::Require(p != nullptr, std::string(name) + " must not be NULL");
}

earresp::SampleBlock ToRate(const earresp::SampleBlock& in, double rate_hz) {
  if (in.sample_rate_hz == rate_hz) return in;
  const double ratio = in.sample_rate_hz / rate_hz;
  const auto factor = static_cast<int>(std::llround(ratio));
  earresp::Require(factor >= 1 && std::abs(ratio - factor) < 1e-9,
                   "audio at " + earresp::FormatReal(in.sample_rate_hz) +
                       " Hz is not an integer multiple of " +
                       earresp::FormatReal(rate_hz) + " Hz");
  return earresp::Decimate(in, factor);
}

}  // namespace

extern "C" {

const char* earresp_version(void) { return "1.0.0"; }

const char* earresp_status_name(earresp_status status) {
  switch (status) {
    case EARRESP_OK:
      return "ok";
    case EARRESP_ERR_INTERNAL:
      return "internal";
    default:
      if (status >= EARRESP_ERR_PARAMETER &&
          status <= EARRESP_ERR_UNDEFINED_METRIC) {
        return earresp::ErrorCodeName(
            static_cast<earresp::ErrorCode>(static_cast<int>(status)));
      }
      return "unknown";
  }
}

const char* earresp_last_error(void) { return g_last_error.c_str(); }

// --- configuration ---

earresp_status earresp_config_create(earresp_config** out) {
  return Guard([&] {
    NotNull(out, "out");
    *out = new earresp_config{};
  });
}

void earresp_config_destroy(earresp_config* config) { delete config; }

earresp_status earresp_config_load(earresp_config* config, const char* path) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(path, "path");
    earresp::PipelineConfig next = config->value;
    earresp::LoadConfigFile(next, path);
    config->value = next;
  });
}

earresp_status earresp_config_set(earresp_config* config, const char* key,
                                  const char* value) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(key, "key");
    NotNull(value, "value");
    earresp::SetConfigValue(config->value, key, value);
  });
}

earresp_status earresp_config_get(const earresp_config* config, const char* key,
                                  char* buf, size_t size, size_t* needed) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(key, "key");
    const std::string value = earresp::GetConfigValue(config->value, key);
    if (needed) *needed = value.size() + 1;
    if (buf && size > 0) {
      const std::size_t n = std::min(size - 1, value.size());
      std::memcpy(buf, value.data(), n);
      buf[n] = '\0';
    }
  });
}

earresp_status earresp_config_write(const earresp_config* config,
                                    const char* path) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(path, "path");
    std::ofstream out(path);
    if (!out) earresp::Fail(earresp::ErrorCode::kIo, std::string("cannot create '") + path + "'");
    earresp::WriteConfig(config->value, out);
  });
}

// --- audio ---

earresp_status earresp_audio_read(const char* path, earresp_audio** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new earresp_audio{earresp::ReadWav(path)};
  });
}

earresp_status earresp_audio_create(const double* samples, size_t count,
                                    double sample_rate_hz, earresp_audio** out) {
  return Guard([&] {
    NotNull(out, "out");
    if (count > 0) NotNull(samples, "samples");
    earresp::SampleBlock block;
    block.sample_rate_hz = sample_rate_hz;
    if (count > 0) block.samples.assign(samples, samples + count);
    earresp::ValidateBlock(block);
    *out = new earresp_audio{std::move(block)};
  });
}

earresp_status earresp_audio_data(const earresp_audio* audio,
                                  const double** samples, size_t* count,
                                  double* sample_rate_hz) {
  return Guard([&] {
    NotNull(audio, "audio");
    if (samples) *samples = audio->value.samples.data();
    if (count) *count = audio->value.size();
    if (sample_rate_hz) *sample_rate_hz = audio->value.sample_rate_hz;
  });
}

earresp_status earresp_audio_write(const earresp_audio* audio, const char* path,
                                   earresp_encoding encoding) {
  return Guard([&] {
    NotNull(audio, "audio");
    NotNull(path, "path");
    earresp::WavEncoding e;
    switch (encoding) {
      case EARRESP_PCM16:
        e = earresp::WavEncoding::kPcm16;
        break;
      case EARRESP_PCM24:
        e = earresp::WavEncoding::kPcm24;
        break;
      case EARRESP_FLOAT32:
        e = earresp::WavEncoding::kFloat32;
        break;
      default:
        earresp::Fail(earresp::ErrorCode::kParameter, "unknown encoding");
    }
    earresp::WriteWav(audio->value, path, e);
  });
}

void earresp_audio_destroy(earresp_audio* audio) { delete audio; }

// --- adaptive noise suppression ---

earresp_status earresp_ans_create(const earresp_config* config,
                                  double sample_rate_hz, earresp_ans** out) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(out, "out");
    *out = new earresp_ans{earresp::AnsProcessor(config->value.ans, sample_rate_hz)};
  });
}

earresp_status earresp_ans_process(earresp_ans* ans, const double* iem,
                                   const double* oem, double* out,
                                   size_t count) {
  return Guard([&] {
    NotNull(ans, "ans");
    if (count == 0) return;
    NotNull(iem, "iem");
    NotNull(oem, "oem");
    NotNull(out, "out");
    ans->value.Process({iem, count}, {oem, count}, {out, count});
  });
}

earresp_status earresp_ans_delay(const earresp_ans* ans, double* delay_samples) {
  return Guard([&] {
    NotNull(ans, "ans");
    NotNull(delay_samples, "delay_samples");
    *delay_samples = ans->value.declared_delay_samples();
  });
}

earresp_status earresp_ans_reset(earresp_ans* ans) {
  return Guard([&] {
    NotNull(ans, "ans");
    ans->value.Reset();
  });
}

void earresp_ans_destroy(earresp_ans* ans) { delete ans; }

earresp_status earresp_denoise(const earresp_config* config,
                               const earresp_audio* iem,
                               const earresp_audio* oem, earresp_audio** out) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(iem, "iem");
    NotNull(oem, "oem");
    NotNull(out, "out");
    const double rate = config->value.ans_rate_hz;
    const earresp::SampleBlock d = ToRate(iem->value, rate);
    const earresp::SampleBlock x = ToRate(oem->value, rate);
    if (d.size() != x.size()) {
      earresp::Fail(earresp::ErrorCode::kAlignment,
                    "IEM has " + std::to_string(d.size()) +
                        " samples but OEM has " + std::to_string(x.size()));
    }
    earresp::AnsProcessor ans(config->value.ans, rate);
    earresp::SampleBlock cleaned{std::vector<double>(d.size()), rate};
    ans.Process(d.samples, x.samples, cleaned.samples);
    *out = new earresp_audio{std::move(cleaned)};
  });
}

earresp_status earresp_noise_reduction_db(const earresp_audio* cleaned,
                                          const earresp_audio* original,
                                          double* out_db) {
  return Guard([&] {
    NotNull(cleaned, "cleaned");
    NotNull(original, "original");
    NotNull(out_db, "out_db");
    *out_db = earresp::NoiseReductionDb(cleaned->value.samples,
                                        original->value.samples);
  });
}

earresp_status earresp_ri_index(const earresp_config* config,
                                const earresp_audio* audio,
                                const earresp_audio* belt, double* out) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(audio, "audio");
    NotNull(belt, "belt");
    NotNull(out, "out");
    *out = earresp::RiIndex(audio->value, belt->value, config->value.ri_k);
  });
}

// --- window records ---

earresp_status earresp_estimate(const earresp_config* config,
                                const earresp_audio* left,
                                const earresp_audio* right,
                                earresp_records** out) {
  return Guard([&] {
    NotNull(config, "config");
    NotNull(left, "left");
    NotNull(out, "out");
    const auto& rr = config->value.rr;
    const auto l = earresp::EstimateWindows(left->value, rr, earresp::Channel::kLeft);
    std::vector<earresp::WindowEstimate> r;
    if (right) {
      r = earresp::EstimateWindows(right->value, rr, earresp::Channel::kRight);
    }
    auto records = earresp::JoinChannels(l, r);
    earresp::RejectOutliers(records, config->value.tau_cpm);
    *out = new earresp_records{std::move(records)};
  });
}

earresp_status earresp_records_attach_belt(earresp_records* records,
                                           const earresp_config* config,
                                           const earresp_audio* belt) {
  return Guard([&] {
    NotNull(records, "records");
    NotNull(config, "config");
    NotNull(belt, "belt");
    const auto truth =
        earresp::GroundTruthWindows(belt->value, config->value.ground_truth);
    earresp::AttachGroundTruth(records->value, truth);
  });
}

earresp_status earresp_records_reject(earresp_records* records, double tau_cpm,
                                      double* retained_fraction) {
  return Guard([&] {
    NotNull(records, "records");
    const double kept = earresp::RejectOutliers(records->value, tau_cpm);
    if (retained_fraction) *retained_fraction = kept;
  });
}

earresp_status earresp_records_count(const earresp_records* records,
                                     size_t* count) {
  return Guard([&] {
    NotNull(records, "records");
    NotNull(count, "count");
    *count = records->value.size();
  });
}

earresp_status earresp_records_get(const earresp_records* records, size_t index,
                                   earresp_window_record* out) {
  return Guard([&] {
    NotNull(records, "records");
    NotNull(out, "out");
    earresp::Require(index < records->value.size(), "record index out of range");
    const earresp::WindowRecord& r = records->value[index];
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out->window_index = r.window_index;
    out->start_s = r.start_s;
    out->has_left = r.rr_left.has_value();
    out->has_right = r.rr_right.has_value();
    out->has_fused = r.rr_fused.has_value();
    out->has_gt = r.gt_cpm.has_value();
    out->rr_left = r.rr_left.value_or(nan);
    out->rr_right = r.rr_right.value_or(nan);
    out->rr_fused = r.rr_fused.value_or(nan);
    out->discrepancy = r.discrepancy.value_or(nan);
    out->gt_cpm = r.gt_cpm.value_or(nan);
    out->accepted = r.accepted;
    out->gt_valid = r.gt_valid;
  });
}

earresp_status earresp_records_read(const char* path, earresp_records** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new earresp_records{earresp::ReadRecordsFile(path)};
  });
}

earresp_status earresp_records_write(const earresp_records* records,
                                     const char* path) {
  return Guard([&] {
    NotNull(records, "records");
    NotNull(path, "path");
    earresp::WriteRecordsFile(records->value, path);
  });
}

void earresp_records_destroy(earresp_records* records) { delete records; }

// --- evaluation ---

earresp_status earresp_report_build(const earresp_records* const* sessions,
                                    const char* const* subjects,
                                    const char* const* conditions,
                                    size_t session_count, double tau_cpm,
                                    const double* nr_db, const double* ri,
                                    earresp_report** out) {
  return Guard([&] {
    NotNull(out, "out");
    if (session_count > 0) NotNull(sessions, "sessions");
    std::vector<earresp::LabeledRecords> labeled;
    for (size_t i = 0; i < session_count; ++i) {
      NotNull(sessions[i], "session records");
      earresp::LabeledRecords l;
      l.subject = subjects && subjects[i] ? subjects[i] : "S01";
      l.condition = conditions && conditions[i] ? conditions[i] : "unknown";
      l.records = sessions[i]->value;
      labeled.push_back(std::move(l));
    }
    std::optional<double> nr, r;
    if (nr_db) nr = *nr_db;
    if (ri) r = *ri;
    *out = new earresp_report{earresp::BuildReport(labeled, tau_cpm, nr, r)};
  });
}

earresp_status earresp_report_get(const earresp_report* report,
                                  const char* field, double* out) {
  return Guard([&] {
    NotNull(report, "report");
    NotNull(field, "field");
    NotNull(out, "out");
    *out = earresp::ReportValue(report->value, field);
  });
}

earresp_status earresp_report_write(const earresp_report* report,
                                    const char* path) {
  return Guard([&] {
    NotNull(report, "report");
    NotNull(path, "path");
    earresp::WriteReportFile(report->value, path);
  });
}

void earresp_report_destroy(earresp_report* report) { delete report; }

earresp_status earresp_sweep_write(const earresp_records* records,
                                   const char* tau_grid, const char* path) {
  return Guard([&] {
    NotNull(records, "records");
    NotNull(tau_grid, "tau_grid");
    NotNull(path, "path");
    const auto grid = earresp::ParseTauGrid(tau_grid);
    earresp::WriteSweepFile(earresp::ThresholdSweep(records->value, grid), path);
  });
}

// --- sessions ---

earresp_status earresp_manifest_load(const char* path, earresp_manifest** out) {
  return Guard([&] {
    NotNull(path, "path");
    NotNull(out, "out");
    *out = new earresp_manifest{earresp::LoadManifest(path)};
  });
}

earresp_status earresp_manifest_get(const earresp_manifest* manifest,
                                    const char* field, const char** value) {
  return Guard([&] {
    NotNull(manifest, "manifest");
    NotNull(field, "field");
    NotNull(value, "value");
    const earresp::SessionManifest& m = manifest->value;
    const std::string f = field;
    const std::string* s = f == "subject"     ? &m.subject
                           : f == "condition" ? &m.condition
                           : f == "left_iem"  ? &m.left_iem
                           : f == "left_oem"  ? &m.left_oem
                           : f == "right_iem" ? &m.right_iem
                           : f == "right_oem" ? &m.right_oem
                           : f == "belt"      ? &m.belt
                                              : nullptr;
    earresp::Require(s != nullptr, "unknown manifest field '" + f + "'");
    *value = s->c_str();
  });
}

earresp_status earresp_manifest_apply(const earresp_manifest* manifest,
                                      earresp_config* config) {
  return Guard([&] {
    NotNull(manifest, "manifest");
    NotNull(config, "config");
    earresp::PipelineConfig next = config->value;
    earresp::ApplyOverrides(manifest->value, next);
    config->value = next;
  });
}

void earresp_manifest_destroy(earresp_manifest* manifest) { delete manifest; }

// --- synthetic scenarios ---

void earresp_synth_defaults(earresp_synth_params* params) {
  if (!params) return;
  params->rate_cpm = 15.0;
  params->duration_s = 60.0;
  params->sample_rate_hz = 8000.0;
  params->noise_kind = "white";
  params->snr_db = -10.0;
  params->seed = 1;
  params->subject = "S01";
  params->condition = nullptr;
}

earresp_status earresp_synth_write(const earresp_synth_params* params,
                                   const earresp_config* config,
                                   const char* out_dir) {
  return Guard([&] {
    NotNull(params, "params");
    NotNull(out_dir, "out_dir");
    earresp::SynthScenario s;
    s.breath_rate_cpm = params->rate_cpm;
    s.duration_s = params->duration_s;
    s.fs_hz = params->sample_rate_hz;
    s.noise_kind = earresp::ParseNoiseKind(params->noise_kind ? params->noise_kind
                                                              : "white");
    s.snr_db = params->snr_db;
    if (config) {
      s.window_s = config->value.rr.window_s;
      s.overlap = config->value.rr.overlap;
    }
    s.seed = params->seed;
    const auto left = earresp::GenerateScenario(s);
    s.seed = params->seed + 1;
    const auto right = earresp::GenerateScenario(s);

    const std::filesystem::path dir(out_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) {
      earresp::Fail(earresp::ErrorCode::kIo,
                    "cannot create '" + dir.string() + "': " + ec.message());
    }
    auto path = [&](const char* name) { return (dir / name).string(); };
    earresp::WriteWav(left.iem, path("left_iem.wav"));
    earresp::WriteWav(left.oem, path("left_oem.wav"));
    earresp::WriteWav(right.iem, path("right_iem.wav"));
    earresp::WriteWav(right.oem, path("right_oem.wav"));
    earresp::WriteWav(left.belt, path("belt.wav"));

    std::ofstream truth(path("truth.csv"));
    if (!truth) earresp::Fail(earresp::ErrorCode::kIo, "cannot create truth.csv");
    truth << "window_index,start_s,truth_cpm\n";
    const auto windows =
        earresp::SegmentWindows(left.iem.size(), s.fs_hz, s.window_s, s.overlap);
    for (std::size_t i = 0; i < windows.size(); ++i) {
      truth << windows[i].index << ',' << earresp::FormatReal(windows[i].start_s)
            << ',' << earresp::FormatReal(left.truth_cpm[i]) << '\n';
    }
    if (!truth) earresp::Fail(earresp::ErrorCode::kIo, "write failed for truth.csv");

    earresp::SessionManifest m;
    m.subject = params->subject ? params->subject : "S01";
    m.condition = params->condition ? params->condition
                                    : earresp::NoiseKindName(s.noise_kind);
    m.left_iem = path("left_iem.wav");
    m.left_oem = path("left_oem.wav");
    m.right_iem = path("right_iem.wav");
    m.right_oem = path("right_oem.wav");
    m.belt = path("belt.wav");
    m.sample_rate_hz = s.fs_hz;
    m.belt_rate_hz = s.belt_rate_hz;
    earresp::WriteManifest(m, path("manifest.ini"));
  });
}

}  // extern "C"
