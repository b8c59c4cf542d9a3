// core/include/avse/config.h

// Copyright 2026  The AVSE-KD Authors

// See ../../../COPYING for clarification regarding multiple authors
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

#ifndef AVSE_CONFIG_H_
#define AVSE_CONFIG_H_

#include <map>
#include <string>
#include <vector>

#include "avse/corpus.h"
#include "avse/metrics.h"
#include "avse/model.h"
#include "avse/spectral.h"
#include "avse/training.h"

namespace avse {

struct ConfigKey {
  std::string name;
  std::string default_value;
  std::string help;
};

/// Every accepted key, grouped by namespace, in a fixed order.
const std::vector<ConfigKey> &ConfigKeys();

/// Flat key = value settings. Starts from the documented defaults; files
/// and overrides may only touch known keys.
class RunConfig {
 public:
  RunConfig();

  /// Throws ConfigError for unknown keys.
  void Set(const std::string &key, const std::string &value);
  /// "key=value".
  void SetAssignment(const std::string &assignment);
  /// Lines of `key = value`; '#' starts a comment, blank lines are skipped.
  void ParseText(const std::string &text, const std::string &source);
  void LoadFile(const std::string &path);

  const std::string &Get(const std::string &key) const;
  double GetDouble(const std::string &key) const;
  std::size_t GetSize(const std::string &key) const;
  std::uint64_t GetUint64(const std::string &key) const;
  bool GetBool(const std::string &key) const;
  std::vector<double> GetDoubleList(const std::string &key) const;

  SpectralConfig Spectral() const;
  /// freq_bins follows the spectral FFT size.
  ModelConfig Model() const;
  TrainConfig Train() const;
  SynthCorpusOptions Corpus() const;
  std::string ManifestPath() const;
  std::string NoisePlanPath() const;
  CorpusManifest LoadManifest() const;
  SegSnrOptions SegSnr() const;
  PesqConfig Pesq() const;
  std::vector<double> Conditions() const;

  /// Every key in ConfigKeys() order as `key = value` lines.
  std::string Dump() const;

  const std::map<std::string, std::string> &values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace avse

#endif  // AVSE_CONFIG_H_
