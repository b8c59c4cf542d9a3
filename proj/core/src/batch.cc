// core/src/batch.cc

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

#include <algorithm>
#include <string>

#include "avse/corpus.h"
#include "avse/error.h"
#include "avse/random.h"
#include "avse/wav_io.h"

namespace avse {

std::size_t PreparedUtterance::NumFrames() const {
  std::size_t frames = std::min(noisy_spec.num_frames, lip.num_frames);
  if (tongue) frames = std::min(frames, tongue->num_frames);
  return frames;
}

PreparedUtterance PrepareUtterance(const CorpusManifest &manifest,
                                   const UtteranceRecord &record,
                                   const SpectralConfig &config,
                                   const PrepareOptions &options) {
  PreparedUtterance utt;
  utt.utt_id = record.utt_id;
  WaveData wave = ReadWav(manifest.Resolve(record.clean_wav));
  if (wave.sample_rate != config.sample_rate)
    throw IoError(record.clean_wav + ": sample rate " +
                  std::to_string(wave.sample_rate) + " != " +
                  std::to_string(config.sample_rate));
  utt.clean = std::move(wave.samples);
  const NoiseAssignment &plan = manifest.NoiseFor(record.utt_id);
  const std::vector<double> noise =
      SynthNoise(plan.noise_class, utt.clean.size(), plan.seed, config.sample_rate);
  utt.noisy = MixAtSnr(utt.clean, noise, options.snr_override.value_or(plan.snr_db), plan.seed).noisy;
  utt.clean_spec = Stft(utt.clean, config);
  utt.noisy_spec = Stft(utt.noisy, config);
  utt.lip = ArticulationPreprocess(ReadUvf(manifest.Resolve(record.lip_uvf)),
                                   Modality::kLip, options.video_height,
                                   options.video_width);
  if (options.load_tongue)
    utt.tongue = ArticulationPreprocess(ReadUvf(manifest.Resolve(record.tongue_uvf)),
                                        Modality::kTongue, options.video_height,
                                        options.video_width);
  return utt;
}

TrainingBatch AssembleBatch(std::span<const PreparedUtterance *const> utts,
                            std::uint64_t seed, const SpectralConfig &config,
                            const MaskTarget &target) {
  if (utts.empty()) throw InvalidArgument("cannot assemble an empty batch");
  const bool with_tongue = utts.front()->tongue.has_value();
  std::size_t frames = SIZE_MAX;
  for (const PreparedUtterance *u : utts) {
    if (u->tongue.has_value() != with_tongue)
      throw InvalidArgument("batch mixes items with and without tongue video");
    if (u->noisy_spec.config.hop_length != config.hop_length ||
        u->noisy_spec.config.fft_size != config.fft_size)
      throw InvalidArgument(u->utt_id + ": spectrogram config differs from batch config");
    const std::size_t n = u->NumFrames();
    if (n < kMinBatchFrames)
      throw InvalidArgument(u->utt_id + ": effective length " + std::to_string(n) +
                            " frames is below the minimum of " +
                            std::to_string(kMinBatchFrames));
    frames = std::min(frames, n);
  }

  TrainingBatch batch;
  batch.num_frames = frames;
  for (std::size_t i = 0; i < utts.size(); ++i) {
    const PreparedUtterance &u = *utts[i];
    Rng rng = MakeRng(seed, streams::kBatchCrop, i);
    const std::size_t offset =
        static_cast<std::size_t>(UniformIndex(rng, u.NumFrames() - frames + 1));
    batch.utt_ids.push_back(u.utt_id);
    batch.crop_offsets.push_back(offset);
    batch.noisy.push_back(u.noisy_spec.CropFrames(offset, frames));
    batch.clean.push_back(u.clean_spec.CropFrames(offset, frames));
    batch.ideal_masks.push_back(IdealComplexMask(batch.clean.back(), batch.noisy.back(),
                                                 target.epsilon, target.bound));
    batch.lips.push_back(u.lip.CropFrames(offset, frames));
    if (with_tongue) batch.tongues.push_back(u.tongue->CropFrames(offset, frames));
  }
  return batch;
}

}  // namespace avse
