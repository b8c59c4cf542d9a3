// tools/cli.cc

// Copyright 2026  The AVSE-KD Authors

// See ../COPYING for clarification regarding multiple authors
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

#include "cli.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "avse/checkpoint.h"
#include "avse/config.h"
#include "avse/corpus.h"
#include "avse/error.h"
#include "avse/metrics.h"
#include "avse/peranalysis.h"
#include "avse/training.h"
#include "avse/wav_io.h"

namespace avse::cli {

namespace {

// A usage problem detected after CLI11 parsing succeeded.
struct UsageError : ConfigError {
  using ConfigError::ConfigError;
};

std::string KeyTable() {
  std::ostringstream os;
  os << "\nConfig keys (set in --config FILE or with --set key=value):\n";
  std::size_t width = 0;
  for (const auto &k : ConfigKeys()) width = std::max(width, k.name.size());
  for (const auto &k : ConfigKeys()) {
    os << "  " << k.name << std::string(width - k.name.size() + 2, ' ') << "default: "
       << (k.default_value.empty() ? "\"\"" : k.default_value) << "  " << k.help << "\n";
  }
  return os.str();
}

struct CommonFlags {
  std::string config_file;
  std::vector<std::string> overrides;

  void Attach(CLI::App *app) {
    app->add_option("--config", config_file, "key = value config file");
    app->add_option("--set", overrides, "override one key, key=value (repeatable)");
    app->footer(KeyTable());
  }

  RunConfig Resolve() const {
    RunConfig rc;
    if (!config_file.empty()) rc.LoadFile(config_file);
    for (const auto &o : overrides) rc.SetAssignment(o);
    return rc;
  }
};

std::string FormatNumber(double v) {
  char buf[32];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

void WriteTextFile(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("write failed for " + path);
}

int SynthCorpus(const CommonFlags &common, const std::string &out_dir,
                const std::optional<std::size_t> &n_train,
                const std::optional<std::size_t> &n_valid,
                const std::optional<std::size_t> &n_test,
                const std::optional<std::uint64_t> &seed, std::ostream &out) {
  RunConfig rc = common.Resolve();
  if (n_train) rc.Set("corpus.n_train", std::to_string(*n_train));
  if (n_valid) rc.Set("corpus.n_valid", std::to_string(*n_valid));
  if (n_test) rc.Set("corpus.n_test", std::to_string(*n_test));
  if (seed) rc.Set("corpus.seed", std::to_string(*seed));
  const SynthCorpusOptions options = rc.Corpus();

  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw UsageError("cannot create output directory " + out_dir + ": " + ec.message());
  const auto probe = std::filesystem::path(out_dir) / ".avse_write_probe";
  {
    std::ofstream f(probe);
    if (!f) throw UsageError("output directory " + out_dir + " is not writable");
  }
  std::filesystem::remove(probe, ec);

  const CorpusManifest m = WriteSyntheticCorpus(out_dir, options);
  out << "manifest\t" << (std::filesystem::path(out_dir) / "manifest.tsv").string() << "\n"
      << "records\t" << m.records.size() << "\n";
  return kExitOk;
}

int Train(const CommonFlags &common, const std::string &role, const std::string &teacher,
          std::ostream &out) {
  const ModelKind kind = ParseModelKind(role);
  if (kind == ModelKind::kStudent && teacher.empty())
    throw UsageError("--role student requires --teacher CKPT");
  if (kind == ModelKind::kTeacher && !teacher.empty())
    throw UsageError("--teacher is only valid with --role student");
  const RunConfig rc = common.Resolve();
  const SpectralConfig spectral = rc.Spectral();
  const ModelConfig model = rc.Model();
  const TrainConfig train = rc.Train();
  const CorpusManifest manifest = rc.LoadManifest();

  const TrainResult r = kind == ModelKind::kTeacher
                            ? TrainTeacher(manifest, model, spectral, train)
                            : TrainStudent(manifest, model, spectral, train, teacher);
  out << "checkpoint\t" << r.checkpoint_path << "\n"
      << "best_epoch\t" << r.best_epoch << "\n"
      << "best_valid_loss\t" << FormatNumber(r.best_valid_loss) << "\n";
  return kExitOk;
}

int EnhanceCommand(const std::string &ckpt, const std::string &in_wav, const std::string &lip,
                   const std::string &tongue, const std::string &out_wav, std::ostream &out,
                   std::ostream &err) {
  LoadedModel model = LoadModel(ckpt);
  if (model.net.kind() == ModelKind::kTeacher && tongue.empty())
    throw UsageError("teacher checkpoint needs --tongue");
  const WaveData wav = ReadWav(in_wav);
  if (wav.sample_rate != model.spectral.sample_rate)
    throw UsageError(in_wav + ": sample rate " + std::to_string(wav.sample_rate) +
                     " does not match the checkpoint's " +
                     std::to_string(model.spectral.sample_rate));
  const VideoFrames lip_video = ReadUvf(lip);
  std::optional<VideoFrames> tongue_video;
  if (!tongue.empty()) tongue_video = ReadUvf(tongue);

  std::vector<std::string> warnings;
  const std::vector<double> enhanced =
      Enhance(model, wav.samples, lip_video, tongue_video ? &*tongue_video : nullptr, &warnings);
  for (const auto &w : warnings) err << "warning: " << w << "\n";
  WriteWav(out_wav, enhanced, model.spectral.sample_rate);
  out << "wrote\t" << out_wav << "\t" << enhanced.size() << " samples\n";
  return kExitOk;
}

int Evaluate(const CommonFlags &common, const std::string &ckpt, const std::string &out_path,
             const std::string &summary_path, std::ostream &out, std::ostream &err) {
  const RunConfig rc = common.Resolve();
  EvaluateOptions options;
  options.conditions = rc.Conditions();
  options.checkpoint = ckpt;
  options.spectral = rc.Spectral();
  options.segsnr = rc.SegSnr();
  options.pesq = rc.Pesq();
  options.work_dir = rc.Get("metrics.work_dir");
  const CorpusManifest manifest = rc.LoadManifest();

  const MetricReport report = EvaluateCorpus(manifest, options);
  std::ostringstream rows, summary;
  report.WriteRows(rows);
  report.WriteSummary(summary);
  WriteTextFile(out_path, rows.str());
  if (!summary_path.empty()) WriteTextFile(summary_path, summary.str());
  out << summary.str();
  for (const auto &f : report.failures) err << "failed: " << f << "\n";
  if (!report.failures.empty()) {
    err << report.failures.size() << " utterance(s) failed; partial report kept\n";
    return kExitFailure;
  }
  return kExitOk;
}

int PerReportCommand(const std::string &ref, const std::string &hyp, const std::string &map,
                     const std::string &out_path, std::ostream &out) {
  const std::string table = PerReport(ref, hyp, map);
  if (!out_path.empty()) WriteTextFile(out_path, table);
  out << table;
  return kExitOk;
}

}  // namespace

int Run(const std::vector<std::string> &args, std::ostream &out, std::ostream &err) {
  CLI::App app{"Audio-visual speech enhancement toolkit", args.empty() ? "avse" : args[0]};
  app.require_subcommand(1);

  CommonFlags synth_flags, train_flags, eval_flags;

  auto *synth = app.add_subcommand("synth-corpus", "write a seeded synthetic corpus");
  std::string synth_out;
  std::optional<std::size_t> n_train, n_valid, n_test;
  std::optional<std::uint64_t> synth_seed;
  synth->add_option("--out", synth_out, "output directory")->required();
  synth->add_option("--n-train", n_train, "train utterances (corpus.n_train)");
  synth->add_option("--n-valid", n_valid, "valid utterances (corpus.n_valid)");
  synth->add_option("--n-test", n_test, "test utterances (corpus.n_test)");
  synth->add_option("--seed", synth_seed, "corpus seed (corpus.seed)");
  synth_flags.Attach(synth);

  auto *train = app.add_subcommand("train", "train a teacher or a distilled student");
  std::string role, teacher;
  train->add_option("--role", role, "teacher or student")
      ->required()
      ->check(CLI::IsMember({"teacher", "student"}));
  train->add_option("--teacher", teacher, "teacher checkpoint (student role)");
  train_flags.Attach(train);

  auto *enhance = app.add_subcommand("enhance", "enhance one noisy recording");
  std::string ckpt, in_wav, lip, tongue, out_wav;
  enhance->add_option("--ckpt", ckpt, "model checkpoint")->required();
  enhance->add_option("--in-wav", in_wav, "noisy 16-bit mono WAV")->required();
  enhance->add_option("--lip", lip, "lip video (.uvf)")->required();
  enhance->add_option("--tongue", tongue, "tongue video (.uvf), teacher only");
  enhance->add_option("--out-wav", out_wav, "enhanced WAV output")->required();
  enhance->footer(KeyTable());

  auto *evaluate = app.add_subcommand("evaluate", "score noisy and enhanced test mixtures");
  std::string eval_ckpt, eval_out, eval_summary;
  evaluate->add_option("--ckpt", eval_ckpt, "checkpoint; omit for the oracle mask");
  evaluate->add_option("--out", eval_out, "per-utterance TSV")->required();
  evaluate->add_option("--summary", eval_summary, "per-condition summary TSV");
  eval_flags.Attach(evaluate);

  auto *per = app.add_subcommand("per-report", "phone error rate by place of articulation");
  std::string ref, hyp, map, per_out;
  per->add_option("--ref", ref, "reference phone file")->required();
  per->add_option("--hyp", hyp, "hypothesis phone file")->required();
  per->add_option("--map", map, "phone to category TSV")->required();
  per->add_option("--out", per_out, "report TSV");
  per->footer(KeyTable());

  std::vector<std::string> rev(args.rbegin(), args.rend());
  if (!rev.empty()) rev.pop_back();
  try {
    app.parse(rev);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*synth) return SynthCorpus(synth_flags, synth_out, n_train, n_valid, n_test, synth_seed, out);
    if (*train) return Train(train_flags, role, teacher, out);
    if (*enhance) return EnhanceCommand(ckpt, in_wav, lip, tongue, out_wav, out, err);
    if (*evaluate) return Evaluate(eval_flags, eval_ckpt, eval_out, eval_summary, out, err);
    if (*per) return PerReportCommand(ref, hyp, map, per_out, out);
  } catch (const ConfigError &e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace avse::cli
