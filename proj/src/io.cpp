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

#include "earresp/io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <sstream>

#include "earresp/error.hpp"

namespace earresp {

namespace {

// --- little-endian helpers ---

std::uint32_t Le32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) |
         static_cast<std::uint32_t>(b[at + 1]) << 8 |
         static_cast<std::uint32_t>(b[at + 2]) << 16 |
         static_cast<std::uint32_t>(b[at + 3]) << 24;
}

std::uint16_t Le16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | b[at + 1] << 8);
}

void Put16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void Put32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void PutTag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

bool TagIs(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

}  // namespace

SampleBlock ParseWav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12) throw FormatError(bytes.size(), "file too short for a RIFF header");
  if (!TagIs(bytes, 0, "RIFF")) throw FormatError(0, "missing RIFF tag");
  if (!TagIs(bytes, 8, "WAVE")) throw FormatError(8, "missing WAVE tag");

  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (true) {
    if (pos + 8 > bytes.size()) {
      throw FormatError(pos, have_fmt ? "missing data chunk" : "missing fmt chunk");
    }
    const std::uint32_t size = Le32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (TagIs(bytes, pos, "fmt ")) {
      if (size < 16 || body + size > bytes.size()) {
        throw FormatError(pos, "truncated fmt chunk");
      }
      format = Le16(bytes, body);
      channels = Le16(bytes, body + 2);
      rate = Le32(bytes, body + 4);
      bits = Le16(bytes, body + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError(body, "truncated extensible fmt chunk");
        format = Le16(bytes, body + 24);
      }
      have_fmt = true;
    } else if (TagIs(bytes, pos, "data")) {
      if (!have_fmt) throw FormatError(pos, "data chunk before fmt chunk");
      if (channels != 1) {
        throw FormatError(pos, "only mono audio is supported (got " +
                                            std::to_string(channels) + " channels)");
      }
      if (rate == 0) throw FormatError(body, "zero sample rate");
      const bool pcm = format == kFormatPcm && (bits == 16 || bits == 24);
      const bool flt = format == kFormatFloat && bits == 32;
      if (!pcm && !flt) {
        throw FormatError(pos, "unsupported encoding (format " +
                                   std::to_string(format) + ", " +
                                   std::to_string(bits) + " bits)");
      }
      const std::size_t width = bits / 8;
      if (body + size > bytes.size()) {
        throw FormatError(bytes.size(), "data chunk truncated (declares " +
                                            std::to_string(size) + " bytes, " +
                                            std::to_string(bytes.size() - body) +
                                            " present)");
      }
      if (size % width != 0) {
        throw FormatError(body + size, "data size is not a whole number of samples");
      }
      SampleBlock block;
      block.sample_rate_hz = rate;
      const std::size_t count = size / width;
      block.samples.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        const std::size_t at = body + i * width;
        if (flt) {
          float f;
          const std::uint32_t raw = Le32(bytes, at);
          std::memcpy(&f, &raw, sizeof f);
          if (!std::isfinite(f)) throw FormatError(at, "non-finite float sample");
          block.samples[i] = f;
        } else if (bits == 16) {
          block.samples[i] = static_cast<std::int16_t>(Le16(bytes, at)) / 32768.0;
        } else {
          std::int32_t v = bytes[at] | bytes[at + 1] << 8 | bytes[at + 2] << 16;
          if (v & 0x800000) v -= 0x1000000;
          block.samples[i] = v / 8388608.0;
        }
      }
      return block;
    }
    pos = body + size + (size & 1u);
  }
}

SampleBlock ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return ParseWav(bytes);
}

std::vector<std::uint8_t> EncodeWav(const SampleBlock& block,
                                    WavEncoding encoding) {
  Require(block.sample_rate_hz > 0.0 && block.sample_rate_hz < 4.3e9,
          "sample rate out of range for a wave file");
  const std::uint16_t bits = encoding == WavEncoding::kPcm16   ? 16
                             : encoding == WavEncoding::kPcm24 ? 24
                                                               : 32;
  const std::uint16_t format =
      encoding == WavEncoding::kFloat32 ? kFormatFloat : kFormatPcm;
  const std::uint32_t width = bits / 8;
  const auto data_size = static_cast<std::uint32_t>(block.size() * width);
  const auto rate = static_cast<std::uint32_t>(std::llround(block.sample_rate_hz));

  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  PutTag(out, "RIFF");
  Put32(out, 36 + data_size);
  PutTag(out, "WAVE");
  PutTag(out, "fmt ");
  Put32(out, 16);
  Put16(out, format);
  Put16(out, 1);
  Put32(out, rate);
  Put32(out, rate * width);
  Put16(out, static_cast<std::uint16_t>(width));
  Put16(out, bits);
  PutTag(out, "data");
  Put32(out, data_size);
  for (double v : block.samples) {
    if (encoding == WavEncoding::kFloat32) {
      const float f = static_cast<float>(v);
      std::uint32_t raw;
      std::memcpy(&raw, &f, sizeof raw);
      Put32(out, raw);
    } else {
      const double full = encoding == WavEncoding::kPcm16 ? 32768.0 : 8388608.0;
      const double q = std::clamp(std::round(v * full), -full, full - 1.0);
      const auto i = static_cast<std::int32_t>(q);
      out.push_back(static_cast<std::uint8_t>(i));
      out.push_back(static_cast<std::uint8_t>(i >> 8));
      if (encoding == WavEncoding::kPcm24) {
        out.push_back(static_cast<std::uint8_t>(i >> 16));
      }
    }
  }
  return out;
}

void WriteWav(const SampleBlock& block, const std::string& path,
              WavEncoding encoding) {
  const std::vector<std::uint8_t> bytes = EncodeWav(block, encoding);
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorCode::kIo, "cannot create '" + path + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------

std::string FormatReal(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", value);
  // Avoid "-0.0000".
  if (std::strcmp(buf, "-0.0000") == 0) return "0.0000";
  return buf;
}

namespace {

std::string Optional(const std::optional<double>& v) {
  return v ? FormatReal(*v) : std::string();
}

std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double ParseReal(const std::string& text, std::size_t line_no) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    Fail(ErrorCode::kFormat, "records line " + std::to_string(line_no) +
                                 ": bad number '" + text + "'");
  }
  return v;
}

std::optional<double> ParseOptional(const std::string& text,
                                    std::size_t line_no) {
  if (text.empty()) return std::nullopt;
  return ParseReal(text, line_no);
}

bool ParseFlag(const std::string& text, std::size_t line_no) {
  if (text == "1") return true;
  if (text == "0") return false;
  Fail(ErrorCode::kFormat, "records line " + std::to_string(line_no) +
                               ": flag must be 0 or 1, got '" + text + "'");
}

}  // namespace

void WriteRecords(std::span<const WindowRecord> records, std::ostream& out) {
  out << kRecordsHeader << '\n';
  for (const WindowRecord& r : records) {
    out << r.window_index << ',' << FormatReal(r.start_s) << ','
        << Optional(r.rr_left) << ',' << Optional(r.rr_right) << ','
        << Optional(r.rr_fused) << ',' << Optional(r.discrepancy) << ','
        << (r.accepted ? 1 : 0) << ',' << Optional(r.gt_cpm) << ','
        << (r.gt_valid ? 1 : 0) << '\n';
  }
}

void WriteRecordsFile(std::span<const WindowRecord> records,
                      const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot create '" + path + "'");
  WriteRecords(records, out);
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::vector<WindowRecord> ReadRecords(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) Fail(ErrorCode::kFormat, "records file is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kRecordsHeader) {
    Fail(ErrorCode::kFormat, "unexpected records header '" + line + "'");
  }
  std::vector<WindowRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = SplitCsv(line);
    if (f.size() != 9) {
      Fail(ErrorCode::kFormat, "records line " + std::to_string(line_no) +
                                   ": expected 9 fields, got " +
                                   std::to_string(f.size()));
    }
    WindowRecord r;
    r.window_index = static_cast<int>(ParseReal(f[0], line_no));
    r.start_s = ParseReal(f[1], line_no);
    r.rr_left = ParseOptional(f[2], line_no);
    r.rr_right = ParseOptional(f[3], line_no);
    r.rr_fused = ParseOptional(f[4], line_no);
    r.discrepancy = ParseOptional(f[5], line_no);
    r.accepted = ParseFlag(f[6], line_no);
    r.gt_cpm = ParseOptional(f[7], line_no);
    r.gt_valid = ParseFlag(f[8], line_no);
    records.push_back(r);
  }
  return records;
}

std::vector<WindowRecord> ReadRecordsFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open '" + path + "'");
  return ReadRecords(in);
}

// ---------------------------------------------------------------------------

namespace {

using ReportField = std::pair<const char*, double EvalReport::*>;

const std::vector<ReportField>& ReportFields() {
  static const std::vector<ReportField> fields = {
      {"mae_cpm", &EvalReport::mae_cpm},
      {"rmse_cpm", &EvalReport::rmse_cpm},
      {"bias_cpm", &EvalReport::bias_cpm},
      {"loa_low_cpm", &EvalReport::loa_low_cpm},
      {"loa_high_cpm", &EvalReport::loa_high_cpm},
      {"nr_db", &EvalReport::nr_db},
      {"ri", &EvalReport::ri},
      {"mad_sigma", &EvalReport::mad_sigma},
      {"mad_low_cpm", &EvalReport::mad_low_cpm},
      {"mad_high_cpm", &EvalReport::mad_high_cpm},
      {"mad_inlier_fraction", &EvalReport::mad_inlier_fraction},
      {"mad_inlier_mae_cpm", &EvalReport::mad_inlier_mae_cpm},
      {"g_ratio", &EvalReport::g_ratio},
      {"tau_cpm", &EvalReport::tau_cpm},
      {"retained_fraction", &EvalReport::retained_fraction},
      {"mae_confident_cpm", &EvalReport::mae_confident_cpm},
      {"rmse_confident_cpm", &EvalReport::rmse_confident_cpm},
  };
  return fields;
}

void WriteGroups(const char* prefix,
                 const std::map<std::string, GroupMetrics>& groups,
                 std::ostream& out) {
  for (const auto& [label, g] : groups) {
    out << "\n[" << prefix << '.' << label << "]\n"
        << "windows = " << g.windows << '\n'
        << "mae_cpm = " << FormatReal(g.mae) << '\n'
        << "rmse_cpm = " << FormatReal(g.rmse) << '\n';
  }
}

}  // namespace

std::vector<std::string> ReportFieldNames() {
  std::vector<std::string> names = {"windows_total", "windows_evaluated"};
  for (const auto& [name, member] : ReportFields()) names.emplace_back(name);
  return names;
}

double ReportValue(const EvalReport& report, const std::string& name) {
  if (name == "windows_total") return static_cast<double>(report.windows_total);
  if (name == "windows_evaluated") {
    return static_cast<double>(report.windows_evaluated);
  }
  for (const auto& [field, member] : ReportFields()) {
    if (name == field) return report.*member;
  }
  Fail(ErrorCode::kParameter, "unknown report field '" + name + "'");
}

void WriteReport(const EvalReport& report, std::ostream& out) {
  out << "[report]\n";
  out << "windows_total = " << report.windows_total << '\n';
  out << "windows_evaluated = " << report.windows_evaluated << '\n';
  for (const auto& [name, member] : ReportFields()) {
    out << name << " = " << FormatReal(report.*member) << '\n';
  }
  WriteGroups("per_subject", report.per_subject, out);
  WriteGroups("per_condition", report.per_condition, out);
}

void WriteReportFile(const EvalReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot create '" + path + "'");
  WriteReport(report, out);
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

void WriteSweep(std::span<const SweepRow> rows, std::ostream& out) {
  out << "tau,mae,rmse,retained_fraction,retained\n";
  for (const SweepRow& r : rows) {
    out << FormatReal(r.tau) << ',' << FormatReal(r.mae) << ','
        << FormatReal(r.rmse) << ',' << FormatReal(r.retained_fraction) << ','
        << r.retained << '\n';
  }
}

void WriteSweepFile(std::span<const SweepRow> rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot create '" + path + "'");
  WriteSweep(rows, out);
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

// ---------------------------------------------------------------------------

namespace {

double ToReal(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) {
    Fail(ErrorCode::kParameter, "config " + key + ": '" + value + "' is not a number");
  }
  return v;
}

int ToInt(const std::string& key, const std::string& value) {
  const double v = ToReal(key, value);
  if (v != std::floor(v) || std::abs(v) > 1e9) {
    Fail(ErrorCode::kParameter, "config " + key + ": '" + value + "' is not an integer");
  }
  return static_cast<int>(v);
}

// Shortest text that parses back to the same double.
std::string RealText(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

struct ConfigEntry {
  std::function<void(PipelineConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

template <typename T>
ConfigEntry RealEntry(T PipelineConfig::*group, double T::*field) {
  return {[=](PipelineConfig& c, const std::string& k, const std::string& v) {
            (c.*group).*field = ToReal(k, v);
          },
          [=](const PipelineConfig& c) { return RealText((c.*group).*field); }};
}

template <typename T>
ConfigEntry IntEntry(T PipelineConfig::*group, int T::*field) {
  return {[=](PipelineConfig& c, const std::string& k, const std::string& v) {
            (c.*group).*field = ToInt(k, v);
          },
          [=](const PipelineConfig& c) {
            return std::to_string((c.*group).*field);
          }};
}

const std::map<std::string, ConfigEntry>& ConfigTable() {
  static const std::map<std::string, ConfigEntry> table = [] {
    std::map<std::string, ConfigEntry> t;
    t["ans.sample_rate_hz"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.ans_rate_hz = ToReal(k, v);
        },
        [](const PipelineConfig& c) { return RealText(c.ans_rate_hz); }};
    t["ans.taps"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.ans.lms.taps = ToInt(k, v);
        },
        [](const PipelineConfig& c) { return std::to_string(c.ans.lms.taps); }};
    t["ans.delay"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.ans.lms.delay = ToInt(k, v);
        },
        [](const PipelineConfig& c) { return std::to_string(c.ans.lms.delay); }};
    auto lms_real = [](double LmsConfig::*field) -> ConfigEntry {
      return {[=](PipelineConfig& c, const std::string& k, const std::string& v) {
                c.ans.lms.*field = ToReal(k, v);
              },
              [=](const PipelineConfig& c) { return RealText(c.ans.lms.*field); }};
    };
    t["ans.step_size"] = lms_real(&LmsConfig::step_size);
    t["ans.leakage"] = lms_real(&LmsConfig::leakage);
    t["ans.clip_threshold"] = lms_real(&LmsConfig::clip_threshold);
    t["ans.epsilon"] = lms_real(&LmsConfig::epsilon);
    t["ans.mode"] = {
        [](PipelineConfig& c, const std::string&, const std::string& v) {
          if (v == "bandpass" || v == "bpf") {
            c.ans.adaptive = false;
          } else {
            c.ans.lms.mode = ParseLmsMode(v);
            c.ans.adaptive = true;
          }
        },
        [](const PipelineConfig& c) {
          return std::string(c.ans.adaptive ? LmsModeName(c.ans.lms.mode)
                                            : "bandpass");
        }};
    t["ans.band_low_hz"] = RealEntry(&PipelineConfig::ans, &AnsConfig::band_low_hz);
    t["ans.band_high_hz"] = RealEntry(&PipelineConfig::ans, &AnsConfig::band_high_hz);
    t["ans.band_order"] = IntEntry(&PipelineConfig::ans, &AnsConfig::band_order);

    t["stft.sample_rate_hz"] = RealEntry(&PipelineConfig::rr, &RrConfig::stft_rate_hz);
    t["stft.window_size"] = IntEntry(&PipelineConfig::rr, &RrConfig::window_size);
    t["stft.hop"] = IntEntry(&PipelineConfig::rr, &RrConfig::hop);

    t["features.quantile"] = RealEntry(&PipelineConfig::rr, &RrConfig::quantile);
    t["features.p_norm"] = RealEntry(&PipelineConfig::rr, &RrConfig::p_norm);
    t["features.a_p"] = RealEntry(&PipelineConfig::rr, &RrConfig::a_p);
    t["features.a_d"] = RealEntry(&PipelineConfig::rr, &RrConfig::a_d);
    auto prep_real = [](double FeaturePrepConfig::*field) -> ConfigEntry {
      return {[=](PipelineConfig& c, const std::string& k, const std::string& v) {
                c.rr.prep.*field = ToReal(k, v);
              },
              [=](const PipelineConfig& c) { return RealText(c.rr.prep.*field); }};
    };
    t["features.band_low_hz"] = prep_real(&FeaturePrepConfig::low_hz);
    t["features.band_high_hz"] = prep_real(&FeaturePrepConfig::high_hz);
    t["features.decimation"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.rr.prep.decimation = ToInt(k, v);
        },
        [](const PipelineConfig& c) { return std::to_string(c.rr.prep.decimation); }};

    auto est_real = [](double EstimatorConfig::*field) -> ConfigEntry {
      return {[=](PipelineConfig& c, const std::string& k, const std::string& v) {
                c.rr.estimator.*field = ToReal(k, v);
              },
              [=](const PipelineConfig& c) { return RealText(c.rr.estimator.*field); }};
    };
    t["estimator.search_low_cpm"] = est_real(&EstimatorConfig::search_low_cpm);
    t["estimator.search_high_cpm"] = est_real(&EstimatorConfig::search_high_cpm);
    t["estimator.min_fundamental_ratio"] =
        est_real(&EstimatorConfig::min_fundamental_ratio);
    t["estimator.pad_multiple"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.rr.estimator.pad_multiple = ToInt(k, v);
        },
        [](const PipelineConfig& c) {
          return std::to_string(c.rr.estimator.pad_multiple);
        }};

    t["windows.window_s"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.rr.window_s = c.ground_truth.window_s = ToReal(k, v);
        },
        [](const PipelineConfig& c) { return RealText(c.rr.window_s); }};
    t["windows.overlap"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.rr.overlap = c.ground_truth.overlap = ToReal(k, v);
        },
        [](const PipelineConfig& c) { return RealText(c.rr.overlap); }};

    t["ground_truth.pad_factor"] =
        IntEntry(&PipelineConfig::ground_truth, &GroundTruthConfig::pad_factor);
    t["ground_truth.low_cpm"] =
        RealEntry(&PipelineConfig::ground_truth, &GroundTruthConfig::low_cpm);
    t["ground_truth.high_cpm"] =
        RealEntry(&PipelineConfig::ground_truth, &GroundTruthConfig::high_cpm);
    t["ground_truth.prominence_ratio"] = RealEntry(
        &PipelineConfig::ground_truth, &GroundTruthConfig::prominence_ratio);

    t["fusion.tau_cpm"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.tau_cpm = ToReal(k, v);
        },
        [](const PipelineConfig& c) { return RealText(c.tau_cpm); }};
    t["evaluation.ri_k"] = {
        [](PipelineConfig& c, const std::string& k, const std::string& v) {
          c.ri_k = ToInt(k, v);
        },
        [](const PipelineConfig& c) { return std::to_string(c.ri_k); }};
    return t;
  }();
  return table;
}

}  // namespace

void SetConfigValue(PipelineConfig& config, const std::string& key,
                    const std::string& value) {
  const auto& table = ConfigTable();
  const auto it = table.find(key);
  if (it == table.end()) Fail(ErrorCode::kParameter, "unknown config key '" + key + "'");
  it->second.set(config, key, value);
}

std::string GetConfigValue(const PipelineConfig& config, const std::string& key) {
  const auto& table = ConfigTable();
  const auto it = table.find(key);
  if (it == table.end()) Fail(ErrorCode::kParameter, "unknown config key '" + key + "'");
  return it->second.get(config);
}

std::vector<std::string> ConfigKeys() {
  std::vector<std::string> keys;
  for (const auto& [key, entry] : ConfigTable()) keys.push_back(key);
  return keys;
}

void LoadConfigText(PipelineConfig& config, const std::string& text) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorCode::kParameter, std::string("config: ") + e.what());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty()) {
      Fail(ErrorCode::kParameter, "config key '" + section + "' is outside a section");
    }
    for (const auto& [name, leaf] : body) {
      SetConfigValue(config, section + "." + name, leaf.get_value<std::string>());
    }
  }
}

void LoadConfigFile(PipelineConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  LoadConfigText(config, ss.str());
}

void WriteConfig(const PipelineConfig& config, std::ostream& out) {
  std::string current;
  for (const auto& [key, entry] : ConfigTable()) {
    const auto dot = key.find('.');
    const std::string section = key.substr(0, dot);
    if (section != current) {
      if (!current.empty()) out << '\n';
      out << '[' << section << "]\n";
      current = section;
    }
    out << key.substr(dot + 1) << " = " << entry.get(config) << '\n';
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string Resolve(const std::string& base_dir, const std::string& name) {
  if (name.empty()) return name;
  const std::filesystem::path p(name);
  if (p.is_absolute() || base_dir.empty()) return name;
  return (std::filesystem::path(base_dir) / p).string();
}

void CheckRate(const std::string& path, double declared) {
  if (path.empty()) return;
  if (!std::filesystem::exists(path)) {
    Fail(ErrorCode::kIo, "manifest names a missing file '" + path + "'");
  }
  const SampleBlock block = ReadWav(path);
  if (block.sample_rate_hz != declared) {
    Fail(ErrorCode::kParameter,
         "'" + path + "' is at " + FormatReal(block.sample_rate_hz) +
             " Hz but the manifest declares " + FormatReal(declared) + " Hz");
  }
}

}  // namespace

SessionManifest ParseManifest(const std::string& text,
                              const std::string& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorCode::kParameter, std::string("manifest: ") + e.what());
  }
  SessionManifest m;
  for (const auto& [section, body] : tree) {
    if (section == "config") {
      for (const auto& [key, leaf] : body) {
        m.overrides.emplace_back(key, leaf.get_value<std::string>());
      }
      continue;
    }
    if (section != "session") {
      Fail(ErrorCode::kParameter, "manifest: unknown section '" + section + "'");
    }
    for (const auto& [key, leaf] : body) {
      const std::string value = leaf.get_value<std::string>();
      if (key == "subject") {
        m.subject = value;
      } else if (key == "condition") {
        m.condition = value;
      } else if (key == "left_iem") {
        m.left_iem = Resolve(base_dir, value);
      } else if (key == "left_oem") {
        m.left_oem = Resolve(base_dir, value);
      } else if (key == "right_iem") {
        m.right_iem = Resolve(base_dir, value);
      } else if (key == "right_oem") {
        m.right_oem = Resolve(base_dir, value);
      } else if (key == "belt") {
        m.belt = Resolve(base_dir, value);
      } else if (key == "sample_rate_hz") {
        m.sample_rate_hz = ToReal("session." + key, value);
      } else if (key == "belt_rate_hz") {
        m.belt_rate_hz = ToReal("session." + key, value);
      } else {
        Fail(ErrorCode::kParameter, "manifest: unknown key 'session." + key + "'");
      }
    }
  }
  if (m.left_iem.empty() && m.right_iem.empty()) {
    Fail(ErrorCode::kParameter, "manifest names no in-ear audio");
  }
  return m;
}

SessionManifest LoadManifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorCode::kIo, "cannot open manifest '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  SessionManifest m = ParseManifest(
      ss.str(), std::filesystem::path(path).parent_path().string());
  for (const std::string* audio :
       {&m.left_iem, &m.left_oem, &m.right_iem, &m.right_oem}) {
    CheckRate(*audio, m.sample_rate_hz);
  }
  CheckRate(m.belt, m.belt_rate_hz);
  return m;
}

void WriteManifest(const SessionManifest& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) Fail(ErrorCode::kIo, "cannot create '" + path + "'");
  const std::filesystem::path dir = std::filesystem::path(path).parent_path();
  auto rel = [&](const std::string& p) {
    if (p.empty() || dir.empty()) return p;
    return std::filesystem::path(p).lexically_proximate(dir).string();
  };
  out << "[session]\n"
      << "subject = " << m.subject << '\n'
      << "condition = " << m.condition << '\n'
      << "sample_rate_hz = " << RealText(m.sample_rate_hz) << '\n'
      << "belt_rate_hz = " << RealText(m.belt_rate_hz) << '\n';
  const std::pair<const char*, const std::string*> files[] = {
      {"left_iem", &m.left_iem},   {"left_oem", &m.left_oem},
      {"right_iem", &m.right_iem}, {"right_oem", &m.right_oem},
      {"belt", &m.belt}};
  for (const auto& [key, value] : files) {
    if (!value->empty()) out << key << " = " << rel(*value) << '\n';
  }
  if (!m.overrides.empty()) {
    out << "\n[config]\n";
    for (const auto& [key, value] : m.overrides) out << key << " = " << value << '\n';
  }
  if (!out) Fail(ErrorCode::kIo, "write failed for '" + path + "'");
}

void ApplyOverrides(const SessionManifest& manifest, PipelineConfig& config) {
  for (const auto& [key, value] : manifest.overrides) {
    SetConfigValue(config, key, value);
  }
}

}  // namespace earresp
