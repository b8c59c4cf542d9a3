// core/include/avse/metrics.h

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

#ifndef AVSE_METRICS_H_
#define AVSE_METRICS_H_

#include <cstddef>
#include <iterator>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "avse/corpus.h"
#include "avse/spectral.h"

namespace avse {

struct SegSnrOptions {
  std::size_t frame = 256;
  std::size_t hop = 128;
  double min_db = -10.0;
  double max_db = 35.0;
  // Frames whose reference energy is below this are skipped.
  double silence_energy = 1e-8;
};

/// Mean of clamped per-frame SNRs over frames with non-silent reference.
/// The caller is responsible for time alignment.
double SegSnr(std::span<const double> ref, std::span<const double> est,
              const SegSnrOptions &options = {});

/// Polyphase resampling by up/down with the Kaiser-windowed sinc used by
/// Octave's resample (60 dB rejection); output length ceil(n * up / down).
std::vector<double> ResamplePoly(std::span<const double> x, int up, int down);

/// Short-time objective intelligibility (10 kHz, 40 dB frame VAD, 15
/// third-octave bands from 150 Hz, 30-frame segments, -15 dB clipping).
double Stoi(std::span<const double> ref, std::span<const double> est,
            int sample_rate = 16000);

struct PesqConfig {
  // Empty means PESQ is not computed.
  std::string executable;
  // Whitespace-separated argument template; {ref} and {est} are replaced.
  std::string args = "+16000 {ref} {est}";
  // The first capture group of the last match is the score.
  std::string pattern = R"(P\.862\.2 Prediction \(MOS-LQO\):\s*=\s*([-+0-9.eE]+))";
};

/// Extracts the score from the tool's output; nullopt if nothing matches.
std::optional<double> ParsePesqOutput(const std::string &output, const std::string &pattern);

/// Runs the external tool. Returns nullopt when unconfigured; on failure
/// returns nullopt and sets `error`.
std::optional<double> PesqBridge(const std::string &ref_wav, const std::string &est_wav,
                                 const PesqConfig &config, std::string *error = nullptr);

struct MetricRow {
  std::string utt_id;
  double condition_db = 0;
  std::string system;  // "noisy", "enhanced" or "oracle"
  double segsnr_db = 0;
  double stoi = 0;
  std::optional<double> pesq;
};

struct ConditionAggregate {
  double condition_db = 0;
  std::string system;
  std::size_t count = 0;
  double segsnr_db = 0;
  double stoi = 0;
  std::optional<double> pesq;  // mean over rows that have a score
};

struct MetricReport {
  std::vector<MetricRow> rows;
  std::vector<ConditionAggregate> aggregates;
  std::vector<std::string> failures;
  bool has_pesq = false;

  /// Recomputes aggregates from rows, grouped by (system, condition) in
  /// first-appearance order.
  void Aggregate();
  /// Columns: utt_id condition system segsnr stoi [pesq].
  void WriteRows(std::ostream &out) const;
  /// One line per system, one column per metric and condition.
  void WriteSummary(std::ostream &out) const;
};

std::string FormatCondition(double snr_db);

struct EvaluateOptions {
  std::vector<double> conditions{std::begin(kEvalSnrsDb), std::end(kEvalSnrsDb)};
  // Empty selects the oracle-mask enhancer.
  std::string checkpoint;
  SpectralConfig spectral;
  SegSnrOptions segsnr;
  PesqConfig pesq;
  // Scratch directory for WAV files handed to the PESQ tool.
  std::string work_dir = ".";
  Split split = Split::kTest;
};

/// Mixes each utterance of the split at every condition, enhances it and
/// scores noisy and enhanced signals against the clean reference.
MetricReport EvaluateCorpus(const CorpusManifest &manifest, const EvaluateOptions &options);

}  // namespace avse

#endif  // AVSE_METRICS_H_
