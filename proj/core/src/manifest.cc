// core/src/manifest.cc

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

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "avse/corpus.h"
#include "avse/error.h"
#include "avse/random.h"
#include "avse/wav_io.h"

namespace avse {
namespace {

std::vector<std::string> SplitTabs(const std::string &line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    fields.push_back(line.substr(start, tab - start));
    if (tab == std::string::npos) break;
    start = tab + 1;
  }
  return fields;
}

std::vector<std::vector<std::string>> ReadTsv(const std::string &path,
                                              std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = SplitTabs(line);
    if (fields.size() != columns)
      throw IoError(path + ":" + std::to_string(line_no) + ": expected " +
                    std::to_string(columns) + " tab-separated fields");
    rows.push_back(std::move(fields));
  }
  return rows;
}

double ParseDouble(const std::string &s, const std::string &where) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw IoError(where + ": bad number '" + s + "'");
  return v;
}

std::string FormatDouble(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

std::string_view SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValid: return "valid";
    case Split::kTest: return "test";
  }
  return "unknown";
}

Split ParseSplit(std::string_view name) {
  for (Split s : {Split::kTrain, Split::kValid, Split::kTest})
    if (SplitName(s) == name) return s;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

void CorpusManifest::Validate() const {
  std::set<std::string> ids;
  for (const auto &r : records)
    if (!ids.insert(r.utt_id).second)
      throw InvalidArgument("duplicate utt_id '" + r.utt_id + "' in manifest");
  std::set<std::string> planned;
  for (const auto &n : noise_plan) {
    if (!ids.count(n.utt_id))
      throw InvalidArgument("noise plan references unknown utt_id '" +
                            n.utt_id + "'");
    if (!planned.insert(n.utt_id).second)
      throw InvalidArgument("noise plan lists '" + n.utt_id + "' twice");
  }
}

std::vector<const UtteranceRecord *> CorpusManifest::BySplit(Split split) const {
  std::vector<const UtteranceRecord *> out;
  for (const auto &r : records)
    if (r.split == split) out.push_back(&r);
  return out;
}

const NoiseAssignment &CorpusManifest::NoiseFor(const std::string &utt_id) const {
  for (const auto &n : noise_plan)
    if (n.utt_id == utt_id) return n;
  throw InvalidArgument("no noise assignment for '" + utt_id + "'");
}

std::string CorpusManifest::Resolve(const std::string &path) const {
  std::filesystem::path p(path);
  if (p.is_absolute() || base_dir.empty()) return path;
  return (std::filesystem::path(base_dir) / p).string();
}

CorpusManifest ReadManifest(const std::string &manifest_tsv,
                            const std::string &noise_plan_tsv) {
  CorpusManifest manifest;
  manifest.base_dir = std::filesystem::path(manifest_tsv).parent_path().string();
  for (auto &f : ReadTsv(manifest_tsv, 5)) {
    UtteranceRecord r;
    r.utt_id = f[0];
    r.clean_wav = f[1];
    r.lip_uvf = f[2];
    r.tongue_uvf = f[3];
    r.split = ParseSplit(f[4]);
    manifest.records.push_back(std::move(r));
  }
  for (auto &f : ReadTsv(noise_plan_tsv, 4)) {
    NoiseAssignment n;
    n.utt_id = f[0];
    n.noise_class = ParseNoiseClass(f[1]);
    n.snr_db = ParseDouble(f[2], noise_plan_tsv);
    std::uint64_t seed = 0;
    auto [ptr, ec] = std::from_chars(f[3].data(), f[3].data() + f[3].size(), seed);
    if (ec != std::errc() || ptr != f[3].data() + f[3].size())
      throw IoError(noise_plan_tsv + ": bad seed '" + f[3] + "'");
    n.seed = seed;
    manifest.noise_plan.push_back(std::move(n));
  }
  manifest.Validate();
  return manifest;
}

void WriteManifest(const CorpusManifest &manifest,
                   const std::string &manifest_tsv,
                   const std::string &noise_plan_tsv) {
  std::ofstream m(manifest_tsv, std::ios::binary);
  if (!m) throw IoError("cannot write " + manifest_tsv);
  for (const auto &r : manifest.records)
    m << r.utt_id << '\t' << r.clean_wav << '\t' << r.lip_uvf << '\t'
      << r.tongue_uvf << '\t' << SplitName(r.split) << '\n';
  std::ofstream n(noise_plan_tsv, std::ios::binary);
  if (!n) throw IoError("cannot write " + noise_plan_tsv);
  for (const auto &a : manifest.noise_plan)
    n << a.utt_id << '\t' << NoiseClassName(a.noise_class) << '\t'
      << FormatDouble(a.snr_db) << '\t' << a.seed << '\n';
  if (!m || !n) throw IoError("manifest write failed");
}

CorpusManifest WriteSyntheticCorpus(const std::string &out_dir,
                                    const SynthCorpusOptions &options) {
  namespace fs = std::filesystem;
  if (!(options.min_duration_s >= 0.5 && options.max_duration_s <= 10.0 &&
        options.min_duration_s <= options.max_duration_s))
    throw InvalidArgument("corpus durations must satisfy 0.5 <= min <= max <= 10");
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wav", ec);
  if (!ec) fs::create_directories(fs::path(out_dir) / "video", ec);
  if (ec) throw IoError("cannot create corpus directory " + out_dir + ": " + ec.message());

  CorpusManifest manifest;
  manifest.base_dir = out_dir;
  std::uint64_t index = 0;
  auto emit = [&](Split split, std::size_t count) {
    for (std::size_t i = 0; i < count; ++i, ++index) {
      char id[64];
      std::snprintf(id, sizeof(id), "%s_%04zu", std::string(SplitName(split)).c_str(), i);
      Rng dur = MakeRng(options.seed, streams::kDuration, index);
      const double duration = Uniform(dur, options.min_duration_s, options.max_duration_s);
      const SynthUtterance utt =
          SynthesizeUtterance(DeriveSeed(options.seed, streams::kUtterance, index), duration);

      UtteranceRecord r;
      r.utt_id = id;
      r.clean_wav = "wav/" + r.utt_id + ".wav";
      r.lip_uvf = "video/" + r.utt_id + "_lip.uvf";
      r.tongue_uvf = "video/" + r.utt_id + "_tongue.uvf";
      r.split = split;
      WriteWav(manifest.Resolve(r.clean_wav), utt.audio);
      WriteUvf(manifest.Resolve(r.lip_uvf), utt.lip);
      WriteUvf(manifest.Resolve(r.tongue_uvf), utt.tongue);

      Rng plan = MakeRng(options.seed, streams::kNoisePlan, index);
      NoiseAssignment n;
      n.utt_id = r.utt_id;
      n.noise_class = kAllNoiseClasses[UniformIndex(plan, std::size(kAllNoiseClasses))];
      n.snr_db = split == Split::kTrain ? kTrainSnrsDb[UniformIndex(plan, 3)]
                                        : kEvalSnrsDb[UniformIndex(plan, 3)];
      n.seed = DeriveSeed(options.seed, streams::kNoise, index);
      manifest.records.push_back(std::move(r));
      manifest.noise_plan.push_back(std::move(n));
    }
  };
  emit(Split::kTrain, options.n_train);
  emit(Split::kValid, options.n_valid);
  emit(Split::kTest, options.n_test);
  WriteManifest(manifest, (fs::path(out_dir) / "manifest.tsv").string(),
                (fs::path(out_dir) / "noise_plan.tsv").string());
  return manifest;
}

}  // namespace avse
