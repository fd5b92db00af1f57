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

// Command-line front end. Uses the C interface only.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "earresp/earresp.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitProcessing = 1;
constexpr int kExitUsage = 2;

// Thrown for failed library calls; carries the library message.
struct CallFailed {
  std::string message;
};

// Bad flag combinations detected after parsing.
struct UsageProblem {
  std::string message;
};

void Check(earresp_status status, const std::string& context) {
  if (status == EARRESP_OK) return;
  throw CallFailed{context + ": " + earresp_last_error() + " [" +
                   earresp_status_name(status) + "]"};
}

template <typename T, void (*Destroy)(T*)>
struct Deleter {
  void operator()(T* p) const { Destroy(p); }
};
using Config = std::unique_ptr<earresp_config, Deleter<earresp_config, earresp_config_destroy>>;
using Audio = std::unique_ptr<earresp_audio, Deleter<earresp_audio, earresp_audio_destroy>>;
using Records = std::unique_ptr<earresp_records, Deleter<earresp_records, earresp_records_destroy>>;
using Report = std::unique_ptr<earresp_report, Deleter<earresp_report, earresp_report_destroy>>;
using Manifest = std::unique_ptr<earresp_manifest, Deleter<earresp_manifest, earresp_manifest_destroy>>;

Audio ReadAudio(const std::string& path) {
  earresp_audio* a = nullptr;
  Check(earresp_audio_read(path.c_str(), &a), "reading " + path);
  return Audio(a);
}

void WriteAudio(const earresp_audio* audio, const std::string& path) {
  Check(earresp_audio_write(audio, path.c_str(), EARRESP_FLOAT32),
        "writing " + path);
}

Manifest LoadManifest(const std::string& path) {
  earresp_manifest* m = nullptr;
  Check(earresp_manifest_load(path.c_str(), &m), "loading manifest " + path);
  return Manifest(m);
}

std::string ManifestField(const earresp_manifest* m, const char* field) {
  const char* value = nullptr;
  Check(earresp_manifest_get(m, field, &value), "manifest");
  return value;
}

std::string RealText(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Flags shared by every subcommand. They override the config file.
struct CommonFlags {
  std::string config_path;
  std::optional<double> tau;
  std::optional<std::string> mode;
  std::optional<double> window_s;
  std::optional<double> overlap;
  std::optional<std::string> search_band;
  std::uint64_t seed = 1;

  void Register(CLI::App* app, bool tau_is_grid) {
    app->add_option("--config", config_path, "Configuration file (key = value with sections)")
        ->check(CLI::ExistingFile);
    if (!tau_is_grid) {
      app->add_option("--tau", tau, "Discrepancy threshold in CPM")
          ->check(CLI::NonNegativeNumber);
    }
    app->add_option("--mode", mode,
                    "Filter variant: delayed-leaky-clipped (dlc), nlms, plain, bandpass");
    app->add_option("--window-s", window_s, "Analysis window length in seconds")
        ->check(CLI::PositiveNumber);
    app->add_option("--overlap", overlap, "Window overlap fraction in [0, 1)")
        ->check(CLI::Range(0.0, 0.999999));
    app->add_option("--search-band", search_band,
                    "Respiration search band in CPM as low:high");
    app->add_option("--seed", seed, "Random seed");
  }

  // Order: defaults, config file, manifest overrides, flags.
  Config Build(const earresp_manifest* manifest = nullptr) const {
    earresp_config* raw = nullptr;
    Check(earresp_config_create(&raw), "config");
    Config config(raw);
    if (!config_path.empty()) {
      Check(earresp_config_load(config.get(), config_path.c_str()),
            "loading " + config_path);
    }
    if (manifest) Check(earresp_manifest_apply(manifest, config.get()), "manifest overrides");
    // A flag value the library rejects is the caller's mistake: exit 2.
    auto set = [&](const char* key, const std::string& value) {
      const earresp_status status = earresp_config_set(config.get(), key, value.c_str());
      if (status == EARRESP_ERR_PARAMETER) throw UsageProblem{earresp_last_error()};
      Check(status, key);
    };
    if (tau) set("fusion.tau_cpm", RealText(*tau));
    if (mode) set("ans.mode", *mode);
    if (window_s) set("windows.window_s", RealText(*window_s));
    if (overlap) set("windows.overlap", RealText(*overlap));
    if (search_band) {
      const auto sep = search_band->find_first_of(":,");
      if (sep == std::string::npos) {
        throw UsageProblem{"--search-band expects low:high, got '" + *search_band + "'"};
      }
      const std::string low = search_band->substr(0, sep);
      const std::string high = search_band->substr(sep + 1);
      char* end = nullptr;
      const double lo = std::strtod(low.c_str(), &end);
      const bool lo_ok = !low.empty() && *end == '\0';
      const double hi = std::strtod(high.c_str(), &end);
      const bool hi_ok = !high.empty() && *end == '\0';
      if (!lo_ok || !hi_ok || !(lo > 0.0) || !(hi > lo)) {
        throw UsageProblem{"--search-band needs 0 < low < high, got '" + *search_band + "'"};
      }
      set("estimator.search_low_cpm", low);
      set("estimator.search_high_cpm", high);
    }
    return config;
  }
};

double GetReal(const earresp_config* config, const char* key) {
  char buf[64];
  Check(earresp_config_get(config, key, buf, sizeof buf, nullptr), key);
  return std::stod(buf);
}

// --- subcommands ---

struct SynthArgs {
  CommonFlags common;
  double rate = 15.0;
  double duration = 60.0;
  std::string snr = "-10";
  std::string noise = "white";
  double fs = 8000.0;
  std::string subject = "S01";
  std::string condition;
  std::string out_dir;
};

int RunSynth(const SynthArgs& a) {
  Config config = a.common.Build();
  earresp_synth_params p;
  earresp_synth_defaults(&p);
  p.rate_cpm = a.rate;
  p.duration_s = a.duration;
  p.sample_rate_hz = a.fs;
  p.noise_kind = a.noise.c_str();
  if (a.snr == "inf" || a.snr == "+inf") {
    p.snr_db = std::numeric_limits<double>::infinity();
  } else {
    try {
      std::size_t used = 0;
      p.snr_db = std::stod(a.snr, &used);
      if (used != a.snr.size()) throw std::invalid_argument(a.snr);
    } catch (const std::exception&) {
      throw UsageProblem{"--snr expects a number in dB or 'inf', got '" + a.snr + "'"};
    }
  }
  p.seed = a.common.seed;
  p.subject = a.subject.c_str();
  p.condition = a.condition.empty() ? nullptr : a.condition.c_str();
  Check(earresp_synth_write(&p, config.get(), a.out_dir.c_str()), "synth");
  std::printf("wrote scenario to %s\n", a.out_dir.c_str());
  return kExitOk;
}

struct DenoiseArgs {
  CommonFlags common;
  std::string manifest;
  std::string iem, oem, out;
  std::string out_dir;
  std::string report;
};

double Denoise(const earresp_config* config, const std::string& iem_path,
               const std::string& oem_path, const std::string& out_path) {
  Audio iem = ReadAudio(iem_path);
  Audio oem = ReadAudio(oem_path);
  earresp_audio* raw = nullptr;
  Check(earresp_denoise(config, iem.get(), oem.get(), &raw), "denoise " + iem_path);
  Audio cleaned(raw);
  WriteAudio(cleaned.get(), out_path);
  double nr = std::numeric_limits<double>::quiet_NaN();
  // NR compares sample by sample, so only when no resampling happened.
  double rate_in = 0.0, rate_out = 0.0;
  Check(earresp_audio_data(iem.get(), nullptr, nullptr, &rate_in), "audio");
  Check(earresp_audio_data(cleaned.get(), nullptr, nullptr, &rate_out), "audio");
  if (rate_in == rate_out &&
      earresp_noise_reduction_db(cleaned.get(), iem.get(), &nr) != EARRESP_OK) {
    std::fprintf(stderr, "note: noise reduction undefined for %s: %s\n",
                 iem_path.c_str(), earresp_last_error());
  }
  return nr;
}

int RunDenoise(const DenoiseArgs& a) {
  std::vector<std::pair<std::string, double>> results;
  if (!a.manifest.empty()) {
    if (a.out_dir.empty()) throw UsageProblem{"--manifest requires --out-dir"};
    Manifest m = LoadManifest(a.manifest);
    Config config = a.common.Build(m.get());
    std::filesystem::create_directories(a.out_dir);
    const std::filesystem::path dir(a.out_dir);
    // The cleaned session reuses the source manifest with new IEM paths.
    std::string text = "[session]\n";
    text += "subject = " + ManifestField(m.get(), "subject") + "\n";
    text += "condition = " + ManifestField(m.get(), "condition") + "\n";
    text += "sample_rate_hz = " + RealText(GetReal(config.get(), "ans.sample_rate_hz")) + "\n";
    for (const char* ear : {"left", "right"}) {
      const std::string iem = ManifestField(m.get(), (std::string(ear) + "_iem").c_str());
      const std::string oem = ManifestField(m.get(), (std::string(ear) + "_oem").c_str());
      if (iem.empty()) continue;
      if (oem.empty()) {
        throw CallFailed{std::string("manifest has no ") + ear + "_oem for " + iem};
      }
      const std::string out = (dir / (std::string(ear) + "_clean.wav")).string();
      const double nr = Denoise(config.get(), iem, oem, out);
      results.emplace_back(ear, nr);
      text += std::string(ear) + "_iem = " + std::filesystem::absolute(out).string() + "\n";
    }
    const std::string belt = ManifestField(m.get(), "belt");
    if (!belt.empty()) {
      text += "belt = " + std::filesystem::absolute(belt).string() + "\n";
      // Belt rate is re-declared by reading the file back in estimate/evaluate.
      Audio b = ReadAudio(belt);
      double rate = 0.0;
      Check(earresp_audio_data(b.get(), nullptr, nullptr, &rate), "belt");
      text += "belt_rate_hz = " + RealText(rate) + "\n";
    }
    std::FILE* f = std::fopen((dir / "manifest.ini").string().c_str(), "w");
    if (!f) throw CallFailed{"cannot create " + (dir / "manifest.ini").string()};
    std::fputs(text.c_str(), f);
    std::fclose(f);
  } else {
    if (a.iem.empty() || a.oem.empty() || a.out.empty()) {
      throw UsageProblem{"denoise needs --manifest and --out-dir, or --iem, --oem and --out"};
    }
    Config config = a.common.Build();
    results.emplace_back("iem", Denoise(config.get(), a.iem, a.oem, a.out));
  }

  std::string report = "[denoise]\n";
  for (const auto& [name, nr] : results) {
    char line[128];
    std::snprintf(line, sizeof line, "nr_db_%s = %.4f\n", name.c_str(), nr);
    report += line;
  }
  std::fputs(report.c_str(), stdout);
  if (!a.report.empty()) {
    std::FILE* f = std::fopen(a.report.c_str(), "w");
    if (!f) throw CallFailed{"cannot create " + a.report};
    std::fputs(report.c_str(), f);
    std::fclose(f);
  }
  return kExitOk;
}

struct EstimateArgs {
  CommonFlags common;
  std::string manifest;
  std::string left, right, belt;
  std::string out;
};

int RunEstimate(const EstimateArgs& a) {
  std::string left = a.left, right = a.right, belt = a.belt;
  Manifest m;
  if (!a.manifest.empty()) {
    m = LoadManifest(a.manifest);
    left = ManifestField(m.get(), "left_iem");
    right = ManifestField(m.get(), "right_iem");
    if (belt.empty()) belt = ManifestField(m.get(), "belt");
    if (left.empty()) std::swap(left, right);
  }
  if (left.empty()) throw UsageProblem{"estimate needs --manifest or --left"};
  Config config = a.common.Build(m.get());
  Audio l = ReadAudio(left);
  Audio r = right.empty() ? Audio() : ReadAudio(right);
  earresp_records* raw = nullptr;
  Check(earresp_estimate(config.get(), l.get(), r.get(), &raw), "estimate " + left);
  Records records(raw);
  if (!belt.empty()) {
    Audio b = ReadAudio(belt);
    Check(earresp_records_attach_belt(records.get(), config.get(), b.get()),
          "ground truth from " + belt);
  }
  Check(earresp_records_write(records.get(), a.out.c_str()), "writing " + a.out);
  std::size_t n = 0;
  Check(earresp_records_count(records.get(), &n), "records");
  std::printf("wrote %zu window records to %s\n", n, a.out.c_str());
  return kExitOk;
}

struct EvaluateArgs {
  CommonFlags common;
  std::string records;
  std::string manifest;
  std::string belt;
  std::string audio;
  std::optional<double> nr_db;
  std::string subject = "S01";
  std::string condition = "unknown";
  std::string out;
};

int RunEvaluate(const EvaluateArgs& a) {
  Manifest m;
  std::string belt = a.belt, subject = a.subject, condition = a.condition;
  if (!a.manifest.empty()) {
    m = LoadManifest(a.manifest);
    if (belt.empty()) belt = ManifestField(m.get(), "belt");
    subject = ManifestField(m.get(), "subject");
    condition = ManifestField(m.get(), "condition");
  }
  Config config = a.common.Build(m.get());
  earresp_records* raw = nullptr;
  Check(earresp_records_read(a.records.c_str(), &raw), "reading " + a.records);
  Records records(raw);
  Audio b;
  if (!belt.empty()) {
    b = ReadAudio(belt);
    Check(earresp_records_attach_belt(records.get(), config.get(), b.get()),
          "ground truth from " + belt);
  }
  std::optional<double> ri;
  if (!a.audio.empty()) {
    if (!b) throw UsageProblem{"--audio needs a belt (--belt or --manifest)"};
    Audio audio = ReadAudio(a.audio);
    double value = 0.0;
    Check(earresp_ri_index(config.get(), audio.get(), b.get(), &value), "RI");
    ri = value;
  }
  const earresp_records* sessions[] = {records.get()};
  const char* subjects[] = {subject.c_str()};
  const char* conditions[] = {condition.c_str()};
  earresp_report* rep = nullptr;
  Check(earresp_report_build(sessions, subjects, conditions, 1,
                             GetReal(config.get(), "fusion.tau_cpm"),
                             a.nr_db ? &*a.nr_db : nullptr, ri ? &*ri : nullptr,
                             &rep),
        "evaluate");
  Report report(rep);
  Check(earresp_report_write(report.get(), a.out.c_str()), "writing " + a.out);
  double mae = 0.0, evaluated = 0.0;
  Check(earresp_report_get(report.get(), "mae_cpm", &mae), "report");
  Check(earresp_report_get(report.get(), "windows_evaluated", &evaluated), "report");
  std::printf("evaluated %.0f windows, MAE %.4f CPM; report in %s\n", evaluated,
              mae, a.out.c_str());
  return kExitOk;
}

struct SweepArgs {
  CommonFlags common;
  std::string records;
  std::string belt;
  std::string grid = "0:0.1:3";
  std::string out;
};

int RunSweep(const SweepArgs& a) {
  Config config = a.common.Build();
  earresp_records* raw = nullptr;
  Check(earresp_records_read(a.records.c_str(), &raw), "reading " + a.records);
  Records records(raw);
  if (!a.belt.empty()) {
    Audio b = ReadAudio(a.belt);
    Check(earresp_records_attach_belt(records.get(), config.get(), b.get()),
          "ground truth from " + a.belt);
  }
  // Records are already loaded, so a parameter error here is the grid flag.
  const earresp_status status = earresp_sweep_write(records.get(), a.grid.c_str(), a.out.c_str());
  if (status == EARRESP_ERR_PARAMETER) {
    throw UsageProblem{std::string("--tau: ") + earresp_last_error()};
  }
  Check(status, "sweep");
  std::printf("wrote sweep table to %s\n", a.out.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"earresp: dual-microphone noise suppression and respiration rate"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.set_version_flag("--version", earresp_version());

  SynthArgs synth;
  CLI::App* synth_cmd = app.add_subcommand("synth", "Generate a synthetic two-ear session");
  synth.common.Register(synth_cmd, false);
  synth_cmd->add_option("--rate", synth.rate, "Breathing rate in CPM");
  synth_cmd->add_option("--duration", synth.duration, "Length in seconds")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--snr", synth.snr, "In-band breath-to-noise ratio in dB, or inf");
  synth_cmd->add_option("--noise", synth.noise,
                        "white, band-limited, cafeteria or music");
  synth_cmd->add_option("--fs", synth.fs, "Audio sample rate in Hz");
  synth_cmd->add_option("--subject", synth.subject, "Subject label");
  synth_cmd->add_option("--condition", synth.condition,
                        "Condition label (default: the noise kind)");
  synth_cmd->add_option("--out", synth.out_dir, "Output directory")->required();

  DenoiseArgs denoise;
  CLI::App* denoise_cmd = app.add_subcommand("denoise", "Suppress ambient noise in in-ear audio");
  denoise.common.Register(denoise_cmd, false);
  denoise_cmd->add_option("--manifest", denoise.manifest, "Session manifest")
      ->check(CLI::ExistingFile);
  denoise_cmd->add_option("--out-dir", denoise.out_dir,
                          "Output directory for a manifest session");
  denoise_cmd->add_option("--iem", denoise.iem, "In-ear recording")->check(CLI::ExistingFile);
  denoise_cmd->add_option("--oem", denoise.oem, "Outer-ear reference")->check(CLI::ExistingFile);
  denoise_cmd->add_option("--out", denoise.out, "Cleaned output");
  denoise_cmd->add_option("--report", denoise.report, "Write the noise-reduction report here");

  EstimateArgs estimate;
  CLI::App* estimate_cmd = app.add_subcommand("estimate", "Estimate respiration rate per window");
  estimate.common.Register(estimate_cmd, false);
  estimate_cmd->add_option("--manifest", estimate.manifest, "Session manifest")
      ->check(CLI::ExistingFile);
  estimate_cmd->add_option("--left", estimate.left, "Left-ear audio")->check(CLI::ExistingFile);
  estimate_cmd->add_option("--right", estimate.right, "Right-ear audio")
      ->check(CLI::ExistingFile);
  estimate_cmd->add_option("--belt", estimate.belt, "Respiration belt for reference rates")
      ->check(CLI::ExistingFile);
  estimate_cmd->add_option("--out", estimate.out, "Window records CSV")->required();

  EvaluateArgs evaluate;
  CLI::App* evaluate_cmd = app.add_subcommand("evaluate", "Score window records against a belt");
  evaluate.common.Register(evaluate_cmd, false);
  evaluate_cmd->add_option("--records", evaluate.records, "Window records CSV")
      ->required()
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--manifest", evaluate.manifest, "Session manifest (belt and labels)")
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--belt", evaluate.belt, "Respiration belt")->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--audio", evaluate.audio, "Cleaned audio for the RI index")
      ->check(CLI::ExistingFile);
  evaluate_cmd->add_option("--nr-db", evaluate.nr_db, "Noise reduction to include in the report");
  evaluate_cmd->add_option("--subject", evaluate.subject, "Subject label");
  evaluate_cmd->add_option("--condition", evaluate.condition, "Condition label");
  evaluate_cmd->add_option("--out", evaluate.out, "Report file")->required();

  SweepArgs sweep;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Tabulate accuracy against the threshold");
  sweep.common.Register(sweep_cmd, true);
  sweep_cmd->add_option("--records", sweep.records, "Window records CSV")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--tau", sweep.grid, "Threshold grid, start:step:stop or a,b,c");
  sweep_cmd->add_option("--belt", sweep.belt, "Respiration belt")->check(CLI::ExistingFile);
  sweep_cmd->add_option("--out", sweep.out, "Sweep table CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*synth_cmd) return RunSynth(synth);
    if (*denoise_cmd) return RunDenoise(denoise);
    if (*estimate_cmd) return RunEstimate(estimate);
    if (*evaluate_cmd) return RunEvaluate(evaluate);
    if (*sweep_cmd) return RunSweep(sweep);
  } catch (const UsageProblem& e) {
    std::fprintf(stderr, "usage error: %s\n", e.message.c_str());
    std::fputs(app.help().c_str(), stderr);
    return kExitUsage;
  } catch (const CallFailed& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return kExitProcessing;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitProcessing;
  }
  return kExitUsage;
}
