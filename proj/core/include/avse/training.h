// core/include/avse/training.h

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

#ifndef AVSE_TRAINING_H_
#define AVSE_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "avse/checkpoint.h"
#include "avse/corpus.h"
#include "avse/losses.h"
#include "avse/model.h"
#include "avse/spectral.h"

namespace avse {

struct TrainConfig {
  double learning_rate = 1e-3;
  double decay_factor = 0.1;
  std::size_t plateau_patience = 10;
  std::size_t max_epochs = 30;
  std::size_t batch_size = 4;
  std::uint64_t seed = 1;
  LossWeights weights;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  // Global gradient-norm clip; 0 disables.
  double grad_clip = 5.0;
  double mask_epsilon = kDefaultMaskEpsilon;
  std::string checkpoint_path = "model.ckpt";
  // Empty disables the TSV log.
  std::string log_path;

  void Validate() const;
};

/// Validation-driven step decay: the rate is multiplied by `factor` once
/// `patience` consecutive epochs pass without a strict improvement.
class PlateauScheduler {
 public:
  PlateauScheduler(double lr, double factor, std::size_t patience);
  /// Feeds one epoch's validation loss; returns true if it improved.
  bool Step(double valid_loss);
  double lr() const { return lr_; }
  double best() const { return best_; }
  std::size_t epochs_since_improvement() const { return since_; }

 private:
  double lr_, factor_;
  std::size_t patience_;
  double best_;
  std::size_t since_ = 0;
};

class Adam {
 public:
  Adam(std::vector<Parameter *> params, double beta1, double beta2, double eps);
  void Step(double lr);
  std::size_t steps() const { return t_; }

 private:
  std::vector<Parameter *> params_;
  std::vector<Tensor> m_, v_;
  double beta1_, beta2_, eps_;
  std::size_t t_ = 0;
};

/// Scales every gradient so the global L2 norm is at most `max_norm`;
/// returns the norm before clipping.
double ClipGradNorm(const std::vector<Parameter *> &params, double max_norm);

struct EpochRecord {
  std::size_t epoch = 0;  // 0 is the pass before any update
  double lr = 0;
  LossTerms train;        // zeros at epoch 0
  double train_total = 0;
  LossTerms valid;
  double valid_total = 0;
};

struct TrainResult {
  std::string checkpoint_path;
  std::size_t best_epoch = 0;
  double best_valid_loss = 0;
  LossTerms best_valid;
  std::vector<EpochRecord> history;
};

/// Loads and mixes every record of `split`.
std::vector<PreparedUtterance> PrepareSplit(const CorpusManifest &manifest, Split split,
                                            const SpectralConfig &spectral,
                                            const ModelConfig &model, bool load_tongue);

TrainResult TrainTeacher(const CorpusManifest &manifest, const ModelConfig &model,
                         const SpectralConfig &spectral, const TrainConfig &config);
TrainResult TrainStudent(const CorpusManifest &manifest, const ModelConfig &model,
                         const SpectralConfig &spectral, const TrainConfig &config,
                         const std::string &teacher_checkpoint);

/// Same loops on already prepared data; the teacher pointer selects
/// distillation and must hold a teacher in inference use only.
TrainResult TrainOnPrepared(ModelKind kind, const std::vector<PreparedUtterance> &train,
                            const std::vector<PreparedUtterance> &valid,
                            const ModelConfig &model, const SpectralConfig &spectral,
                            const TrainConfig &config, AvseNet *teacher);

/// Validation loss terms of `net` on full utterances, batch size 1,
/// inference mode. With a teacher the KD terms are filled in as well.
LossTerms EvaluateLosses(AvseNet &net, const std::vector<PreparedUtterance> &utts,
                         const SpectralConfig &spectral, double mask_epsilon,
                         AvseNet *teacher);

/// STFT, network mask, ISTFT. Videos are resized to the model's frame size.
/// A tongue video given to a student is ignored with a warning; a teacher
/// without one is rejected. Output covers the aligned frame count.
std::vector<double> Enhance(LoadedModel &model, const std::vector<double> &noisy,
                            const VideoFrames &lip, const VideoFrames *tongue,
                            std::vector<std::string> *warnings = nullptr);
/// Enhance on already preprocessed inputs; frames are truncated to the
/// shortest of the given streams.
std::vector<double> EnhanceSequences(LoadedModel &model, const ComplexSpectrogram &noisy,
                                     const ArticulationSequence &lip,
                                     const ArticulationSequence *tongue,
                                     std::vector<std::string> *warnings = nullptr);
/// Applies the unclipped ideal ratio mask of `clean` to `noisy`.
std::vector<double> OracleEnhance(const std::vector<double> &clean,
                                  const std::vector<double> &noisy,
                                  const SpectralConfig &spectral);

}  // namespace avse

#endif  // AVSE_TRAINING_H_
