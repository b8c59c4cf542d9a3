// core/src/metrics.cc

// Copyright 2026  The AVSE-KD Authors

// See ../../COPYING for clarification regarding multiple authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#include "avse/metrics.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <memory>
#include <regex>
#include <sstream>
#include <sys/wait.h>

#include "avse/checkpoint.h"
#include "avse/error.h"
#include "avse/training.h"
#include "avse/wav_io.h"

namespace avse {
namespace {

std::string Num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

std::string ShellQuote(const std::string &s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

void ReplaceAll(std::string *s, const std::string &from, const std::string &to) {
  for (std::size_t pos = 0; (pos = s->find(from, pos)) != std::string::npos; pos += to.size())
    s->replace(pos, from.size(), to);
}

}  // namespace

double SegSnr(std::span<const double> ref, std::span<const double> est,
              const SegSnrOptions &o) {
  if (ref.size() != est.size())
    throw InvalidArgument("segsnr: signals differ in length (" + std::to_string(ref.size()) +
                          " vs " + std::to_string(est.size()) + ")");
  if (o.frame == 0 || o.hop == 0) throw InvalidArgument("segsnr: frame and hop must be positive");
  if (ref.size() < o.frame) throw InvalidArgument("segsnr: signal shorter than one frame");
  const std::size_t frames = 1 + (ref.size() - o.frame) / o.hop;
  double sum = 0.0;
  std::size_t kept = 0;
  for (std::size_t i = 0; i < frames; ++i) {
    double sig = 0.0, err = 0.0;
    for (std::size_t k = i * o.hop; k < i * o.hop + o.frame; ++k) {
      sig += ref[k] * ref[k];
      const double d = ref[k] - est[k];
      err += d * d;
    }
    if (sig < o.silence_energy) continue;
    const double db = err > 0 ? 10 * std::log10(sig / err) : o.max_db;
    sum += std::clamp(db, o.min_db, o.max_db);
    ++kept;
  }
  if (kept == 0) throw InvalidArgument("segsnr: reference is silent in every frame");
  return sum / static_cast<double>(kept);
}

std::optional<double> ParsePesqOutput(const std::string &output, const std::string &pattern) {
  const std::regex re(pattern);
  std::optional<double> score;
  for (auto it = std::sregex_iterator(output.begin(), output.end(), re);
       it != std::sregex_iterator(); ++it) {
    const std::string text = it->size() > 1 ? (*it)[1].str() : (*it)[0].str();
    double v = 0;
    auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec == std::errc() && p == text.data() + text.size()) score = v;
  }
  return score;
}

std::optional<double> PesqBridge(const std::string &ref_wav, const std::string &est_wav,
                                 const PesqConfig &config, std::string *error) {
  if (config.executable.empty()) return std::nullopt;
  std::string command = ShellQuote(config.executable);
  std::istringstream args(config.args);
  std::string token;
  while (args >> token) {
    ReplaceAll(&token, "{ref}", ref_wav);
    ReplaceAll(&token, "{est}", est_wav);
    command += " " + ShellQuote(token);
  }
  command += " 2>&1";
  std::unique_ptr<FILE, int (*)(FILE *)> pipe(popen(command.c_str(), "r"), pclose);
  if (!pipe) {
    if (error) *error = "cannot start '" + config.executable + "'";
    return std::nullopt;
  }
  std::string output;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe.get())) > 0) output.append(buf, n);
  const int status = pclose(pipe.release());
  if (status != 0) {
    if (error)
      *error = "'" + config.executable + "' exited with status " +
               std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : status);
    return std::nullopt;
  }
  std::optional<double> score = ParsePesqOutput(output, config.pattern);
  if (!score && error) *error = "no score found in PESQ output";
  return score;
}

std::string FormatCondition(double snr_db) { return Num(snr_db); }

void MetricReport::Aggregate() {
  aggregates.clear();
  std::vector<std::string> systems;
  std::vector<double> conditions;
  for (const MetricRow &r : rows) {
    if (std::find(systems.begin(), systems.end(), r.system) == systems.end())
      systems.push_back(r.system);
    if (std::find(conditions.begin(), conditions.end(), r.condition_db) == conditions.end())
      conditions.push_back(r.condition_db);
  }
  for (const std::string &system : systems)
    for (double cond : conditions) {
      ConditionAggregate agg;
      agg.system = system;
      agg.condition_db = cond;
      double pesq_sum = 0;
      std::size_t pesq_count = 0;
      for (const MetricRow &r : rows) {
        if (r.system != system || r.condition_db != cond) continue;
        ++agg.count;
        agg.segsnr_db += r.segsnr_db;
        agg.stoi += r.stoi;
        if (r.pesq) {
          pesq_sum += *r.pesq;
          ++pesq_count;
        }
      }
      if (agg.count == 0) continue;
      agg.segsnr_db /= static_cast<double>(agg.count);
      agg.stoi /= static_cast<double>(agg.count);
      if (pesq_count) agg.pesq = pesq_sum / static_cast<double>(pesq_count);
      aggregates.push_back(agg);
    }
}

void MetricReport::WriteRows(std::ostream &out) const {
  out << "utt_id\tcondition\tsystem\tsegsnr\tstoi" << (has_pesq ? "\tpesq" : "") << '\n';
  for (const MetricRow &r : rows) {
    out << r.utt_id << '\t' << FormatCondition(r.condition_db) << '\t' << r.system << '\t'
        << Num(r.segsnr_db) << '\t' << Num(r.stoi);
    if (has_pesq) out << '\t' << (r.pesq ? Num(*r.pesq) : "NA");
    out << '\n';
  }
}

void MetricReport::WriteSummary(std::ostream &out) const {
  std::vector<std::string> systems;
  std::vector<double> conditions;
  for (const ConditionAggregate &a : aggregates) {
    if (std::find(systems.begin(), systems.end(), a.system) == systems.end())
      systems.push_back(a.system);
    if (std::find(conditions.begin(), conditions.end(), a.condition_db) == conditions.end())
      conditions.push_back(a.condition_db);
  }
  std::vector<std::string> metrics{"segsnr", "stoi"};
  if (has_pesq) metrics.push_back("pesq");
  out << "system";
  for (const auto &m : metrics)
    for (double c : conditions) out << '\t' << m << '@' << FormatCondition(c) << "dB";
  out << '\n';
  for (const std::string &system : systems) {
    out << system;
    for (const auto &m : metrics)
      for (double c : conditions) {
        const ConditionAggregate *found = nullptr;
        for (const auto &a : aggregates)
          if (a.system == system && a.condition_db == c) found = &a;
        out << '\t';
        if (!found) {
          out << "NA";
        } else if (m == "segsnr") {
          out << Num(found->segsnr_db);
        } else if (m == "stoi") {
          out << Num(found->stoi);
        } else {
          out << (found->pesq ? Num(*found->pesq) : "NA");
        }
      }
    out << '\n';
  }
}

MetricReport EvaluateCorpus(const CorpusManifest &manifest, const EvaluateOptions &options) {
  const std::vector<const UtteranceRecord *> records = manifest.BySplit(options.split);
  if (records.empty())
    throw InvalidArgument("no utterances in the " + std::string(SplitName(options.split)) +
                          " split");
  std::optional<LoadedModel> model;
  if (!options.checkpoint.empty()) model.emplace(LoadModel(options.checkpoint));
  const SpectralConfig spectral = model ? model->spectral : options.spectral;
  const std::string system = model ? "enhanced" : "oracle";

  MetricReport report;
  report.has_pesq = !options.pesq.executable.empty();
  for (const UtteranceRecord *rec : records)
    for (double cond : options.conditions) {
      try {
        PrepareOptions prep;
        prep.snr_override = cond;
        prep.load_tongue = model && model->net.kind() == ModelKind::kTeacher;
        if (model) {
          prep.video_height = model->net.config().video_height;
          prep.video_width = model->net.config().video_width;
        }
        const PreparedUtterance u = PrepareUtterance(manifest, *rec, spectral, prep);
        const std::vector<double> enhanced =
            model ? EnhanceSequences(*model, u.noisy_spec, u.lip,
                                     u.tongue ? &*u.tongue : nullptr)
                  : OracleEnhance(u.clean, u.noisy, spectral);
        const std::size_t len = std::min(enhanced.size(), u.clean.size());
        const std::span<const double> ref(u.clean.data(), len);
        const std::span<const double> noisy(u.noisy.data(), len);
        const std::span<const double> est(enhanced.data(), len);

        MetricRow noisy_row{rec->utt_id, cond, "noisy", SegSnr(ref, noisy, options.segsnr),
                            Stoi(ref, noisy, spectral.sample_rate), std::nullopt};
        MetricRow est_row{rec->utt_id, cond, system, SegSnr(ref, est, options.segsnr),
                          Stoi(ref, est, spectral.sample_rate), std::nullopt};
        if (report.has_pesq) {
          const std::string stem =
              options.work_dir + "/" + rec->utt_id + "_" + FormatCondition(cond) + "dB_";
          WriteWav(stem + "clean.wav", ref, spectral.sample_rate);
          WriteWav(stem + "noisy.wav", noisy, spectral.sample_rate);
          WriteWav(stem + system + ".wav", est, spectral.sample_rate);
          std::string err;
          noisy_row.pesq = PesqBridge(stem + "clean.wav", stem + "noisy.wav", options.pesq, &err);
          if (!noisy_row.pesq) report.failures.push_back(rec->utt_id + " pesq (noisy): " + err);
          err.clear();
          est_row.pesq = PesqBridge(stem + "clean.wav", stem + system + ".wav", options.pesq, &err);
          if (!est_row.pesq) report.failures.push_back(rec->utt_id + " pesq: " + err);
        }
        report.rows.push_back(std::move(noisy_row));
        report.rows.push_back(std::move(est_row));
      } catch (const std::exception &e) {
        report.failures.push_back(rec->utt_id + " at " + FormatCondition(cond) + " dB: " + e.what());
      }
    }
  report.Aggregate();
  return report;
}

}  // namespace avse
