// core/src/config.cc

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

#include "avse/config.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "avse/error.h"

namespace avse {

namespace {

std::string Trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T ParseNumber(const std::string &key, const std::string &value, const char *what) {
  T v{};
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc() || p != value.data() + value.size())
    throw ConfigError(key + ": expected " + what + ", got '" + value + "'");
  return v;
}

}  // namespace

const std::vector<ConfigKey> &ConfigKeys() {
  static const std::vector<ConfigKey> keys = {
      {"spectral.sample_rate", "16000", "audio sample rate in Hz"},
      {"spectral.win_length", "512", "Hann window length in samples"},
      {"spectral.hop_length", "196", "STFT hop in samples"},
      {"spectral.fft_size", "512", "FFT size; bins = fft_size/2 + 1"},

      {"model.base_channels", "16", "audio stream width after the input convs"},
      {"model.articulation_channels", "8,16,32", "3D conv widths of the video front end"},
      {"model.n_feature_blocks", "7", "feature blocks per encoder stream"},
      {"model.lstm_layers", "2", "LSTM layers at the bottleneck"},
      {"model.lstm_hidden", "256", "LSTM hidden size"},
      {"model.mask_bound", "1", "mask head bound K (tanh scale)"},
      {"model.leaky_slope", "0.2", "LeakyReLU negative slope"},
      {"model.trace_points", "", "comma list of captured layers; empty = all"},
      {"model.video_height", "64", "articulation frame height"},
      {"model.video_width", "128", "articulation frame width"},

      {"train.learning_rate", "0.001", "initial Adam learning rate"},
      {"train.decay_factor", "0.1", "learning-rate multiplier on plateau"},
      {"train.plateau_patience", "10", "epochs without improvement before decay"},
      {"train.max_epochs", "30", "training epochs"},
      {"train.batch_size", "4", "utterances per mini-batch"},
      {"train.seed", "1", "seed for init, shuffling and crops"},
      {"train.alpha", "1", "weight of the spectrogram loss"},
      {"train.gamma1", "1", "weight of the feature MSE distillation loss"},
      {"train.gamma2", "1", "weight of the similarity distillation loss"},
      {"train.auto_balance", "false", "rescale KD terms by running means"},
      {"train.kd_per_item", "true", "divide the feature MSE by batch size"},
      {"train.beta1", "0.9", "Adam beta1"},
      {"train.beta2", "0.999", "Adam beta2"},
      {"train.adam_eps", "1e-08", "Adam epsilon"},
      {"train.grad_clip", "5", "global gradient-norm clip; 0 disables"},
      {"train.mask_epsilon", "1e-08", "ideal mask denominator epsilon"},
      {"train.checkpoint", "model.ckpt", "output checkpoint path"},
      {"train.log", "", "training log TSV path; empty disables"},

      {"corpus.manifest", "corpus/manifest.tsv", "manifest TSV"},
      {"corpus.noise_plan", "corpus/noise_plan.tsv", "noise plan TSV"},
      {"corpus.n_train", "50", "synthetic train utterances"},
      {"corpus.n_valid", "10", "synthetic valid utterances"},
      {"corpus.n_test", "10", "synthetic test utterances"},
      {"corpus.seed", "1", "synthetic corpus seed"},
      {"corpus.min_duration", "1", "shortest synthetic utterance in seconds"},
      {"corpus.max_duration", "3", "longest synthetic utterance in seconds"},

      {"metrics.conditions", "2.5,-2.5,-7.5", "evaluation SNRs in dB"},
      {"metrics.segsnr_frame", "256", "SegSNR frame length"},
      {"metrics.segsnr_hop", "128", "SegSNR hop"},
      {"metrics.segsnr_min", "-10", "SegSNR lower clamp in dB"},
      {"metrics.segsnr_max", "35", "SegSNR upper clamp in dB"},
      {"metrics.pesq_executable", "", "external PESQ program; empty disables"},
      {"metrics.pesq_args", "+16000 {ref} {est}", "PESQ argument template"},
      {"metrics.pesq_pattern", PesqConfig{}.pattern, "regex; group 1 is the score"},
      {"metrics.work_dir", ".", "scratch directory for PESQ inputs"},
  };
  return keys;
}

RunConfig::RunConfig() {
  for (const auto &k : ConfigKeys()) values_[k.name] = k.default_value;
}

void RunConfig::Set(const std::string &key, const std::string &value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second = value;
}

void RunConfig::SetAssignment(const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw ConfigError("expected key=value, got '" + assignment + "'");
  Set(Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

void RunConfig::ParseText(const std::string &text, const std::string &source) {
  std::istringstream in(text);
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    // '#' inside a value would break regex patterns, so only whole-line
    // comments are recognised.
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    try {
      SetAssignment(t);
    } catch (const ConfigError &e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void RunConfig::LoadFile(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  ParseText(ss.str(), path);
}

const std::string &RunConfig::Get(const std::string &key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
  return it->second;
}

double RunConfig::GetDouble(const std::string &key) const {
  return ParseNumber<double>(key, Get(key), "a number");
}

std::size_t RunConfig::GetSize(const std::string &key) const {
  return ParseNumber<std::size_t>(key, Get(key), "a non-negative integer");
}

std::uint64_t RunConfig::GetUint64(const std::string &key) const {
  return ParseNumber<std::uint64_t>(key, Get(key), "a non-negative integer");
}

bool RunConfig::GetBool(const std::string &key) const {
  const std::string &v = Get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<double> RunConfig::GetDoubleList(const std::string &key) const {
  std::vector<double> out;
  std::stringstream ss(Get(key));
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ParseNumber<double>(key, Trim(item), "a number list"));
  return out;
}

SpectralConfig RunConfig::Spectral() const {
  SpectralConfig c;
  c.sample_rate = static_cast<int>(GetSize("spectral.sample_rate"));
  c.win_length = static_cast<int>(GetSize("spectral.win_length"));
  c.hop_length = static_cast<int>(GetSize("spectral.hop_length"));
  c.fft_size = static_cast<int>(GetSize("spectral.fft_size"));
  try {
    c.Validate();
  } catch (const InvalidArgument &e) {
    throw ConfigError(e.what());
  }
  return c;
}

ModelConfig RunConfig::Model() const {
  std::map<std::string, std::string> kv;
  for (const auto &[k, v] : values_)
    if (k.rfind("model.", 0) == 0) kv.emplace(k, v);
  ModelConfig c = ModelConfigFromKeyValues(kv);
  c.freq_bins = Spectral().NumBins();
  c.Validate();
  return c;
}

TrainConfig RunConfig::Train() const {
  TrainConfig c;
  c.learning_rate = GetDouble("train.learning_rate");
  c.decay_factor = GetDouble("train.decay_factor");
  c.plateau_patience = GetSize("train.plateau_patience");
  c.max_epochs = GetSize("train.max_epochs");
  c.batch_size = GetSize("train.batch_size");
  c.seed = GetUint64("train.seed");
  c.weights.alpha = GetDouble("train.alpha");
  c.weights.gamma1 = GetDouble("train.gamma1");
  c.weights.gamma2 = GetDouble("train.gamma2");
  c.weights.auto_balance = GetBool("train.auto_balance");
  c.weights.kd_per_item = GetBool("train.kd_per_item");
  c.beta1 = GetDouble("train.beta1");
  c.beta2 = GetDouble("train.beta2");
  c.adam_eps = GetDouble("train.adam_eps");
  c.grad_clip = GetDouble("train.grad_clip");
  c.mask_epsilon = GetDouble("train.mask_epsilon");
  c.checkpoint_path = Get("train.checkpoint");
  c.log_path = Get("train.log");
  c.Validate();
  return c;
}

SynthCorpusOptions RunConfig::Corpus() const {
  SynthCorpusOptions o;
  o.n_train = GetSize("corpus.n_train");
  o.n_valid = GetSize("corpus.n_valid");
  o.n_test = GetSize("corpus.n_test");
  o.seed = GetUint64("corpus.seed");
  o.min_duration_s = GetDouble("corpus.min_duration");
  o.max_duration_s = GetDouble("corpus.max_duration");
  if (!(o.min_duration_s >= 0.5 && o.min_duration_s <= o.max_duration_s &&
        o.max_duration_s <= 10.0))
    throw ConfigError("corpus durations must satisfy 0.5 <= min <= max <= 10");
  return o;
}

std::string RunConfig::ManifestPath() const { return Get("corpus.manifest"); }
std::string RunConfig::NoisePlanPath() const { return Get("corpus.noise_plan"); }

CorpusManifest RunConfig::LoadManifest() const {
  return ReadManifest(ManifestPath(), NoisePlanPath());
}

SegSnrOptions RunConfig::SegSnr() const {
  SegSnrOptions o;
  o.frame = GetSize("metrics.segsnr_frame");
  o.hop = GetSize("metrics.segsnr_hop");
  o.min_db = GetDouble("metrics.segsnr_min");
  o.max_db = GetDouble("metrics.segsnr_max");
  if (o.frame == 0 || o.hop == 0 || !(o.min_db < o.max_db))
    throw ConfigError("metrics.segsnr_* must give positive framing and min < max");
  return o;
}

PesqConfig RunConfig::Pesq() const {
  PesqConfig p;
  p.executable = Get("metrics.pesq_executable");
  p.args = Get("metrics.pesq_args");
  p.pattern = Get("metrics.pesq_pattern");
  return p;
}

std::vector<double> RunConfig::Conditions() const {
  auto c = GetDoubleList("metrics.conditions");
  if (c.empty()) throw ConfigError("metrics.conditions must list at least one SNR");
  return c;
}

std::string RunConfig::Dump() const {
  std::string out;
  for (const auto &k : ConfigKeys()) out += k.name + " = " + values_.at(k.name) + "\n";
  return out;
}

}  // namespace avse
