// core/include/avse/corpus.h

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

#ifndef AVSE_CORPUS_H_
#define AVSE_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "avse/spectral.h"

namespace avse {

// ---------------------------------------------------------------------------
// Noise synthesis and mixing.

enum class NoiseClass { kWhite, kPink, kBabbleLike, kHum, kSpeechShaped };

inline constexpr NoiseClass kAllNoiseClasses[] = {
    NoiseClass::kWhite, NoiseClass::kPink, NoiseClass::kBabbleLike,
    NoiseClass::kHum, NoiseClass::kSpeechShaped};

std::string_view NoiseClassName(NoiseClass noise_class);
/// Accepts "white", "pink", "babble_like", "hum", "speech_shaped".
NoiseClass ParseNoiseClass(std::string_view name);

/// Deterministic zero-mean, unit-variance noise of the given class.
std::vector<double> SynthNoise(NoiseClass noise_class, std::size_t length,
                               std::uint64_t seed, int sample_rate = 16000);

double MeanPower(std::span<const double> x);

struct Mixture {
  std::vector<double> noisy;
  std::vector<double> scaled_noise;  // g * (tiled noise)
  double gain = 0.0;
  std::size_t offset = 0;            // start index into the noise
};

/// Tiles/crops `noise` to the length of `clean` from a seeded offset and
/// scales it so that 10 log10(P_clean / P_noise) equals snr_db over the
/// whole utterance.
Mixture MixAtSnr(std::span<const double> clean, std::span<const double> noise,
                 double snr_db, std::uint64_t seed);

inline constexpr double kTrainSnrsDb[] = {0.0, -5.0, -10.0};
inline constexpr double kEvalSnrsDb[] = {2.5, -2.5, -7.5};

// ---------------------------------------------------------------------------
// Video and articulation features.

inline constexpr double kVideoFps = 81.5;
inline constexpr std::size_t kVideoHeight = 64;
inline constexpr std::size_t kVideoWidth = 128;

/// Grayscale frame stack, values in [0, 1], layout T x H x W.
struct VideoFrames {
  std::size_t num_frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  double fps = kVideoFps;
  std::vector<double> pixels;

  double At(std::size_t t, std::size_t y, std::size_t x) const {
    return pixels[(t * height + y) * width + x];
  }
};

enum class Modality { kLip, kTongue };

/// Three-channel articulation input: channel 0 is the raw frame, channels 1
/// and 2 the per-utterance pixel mean and population standard deviation.
/// The two statistic channels are constant along T and stored once; raw
/// frames are held in single precision (sources are 8-bit video).
struct ArticulationSequence {
  std::size_t num_frames = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  double fps = kVideoFps;
  Modality modality = Modality::kLip;
  std::vector<float> raw;      // T x H x W
  std::vector<double> mean;    // H x W
  std::vector<double> stddev;  // H x W

  /// Value of the logical 3 x T x H x W grid.
  double At(std::size_t channel, std::size_t t, std::size_t y,
            std::size_t x) const;
  ArticulationSequence CropFrames(std::size_t start, std::size_t count) const;
};

/// Bilinear resize of every frame (half-pixel centres).
VideoFrames ResizeFrames(const VideoFrames &video, std::size_t height,
                         std::size_t width);

ArticulationSequence ArticulationPreprocess(
    const VideoFrames &video, Modality modality = Modality::kLip,
    std::size_t height = kVideoHeight, std::size_t width = kVideoWidth);

// .uvf container: "AVSE", u32 version, u32 T, u32 H, u32 W, f64 fps, then
// T*H*W u8 pixels (frame-major, row-major). All little-endian.
std::string EncodeUvf(const VideoFrames &video);
VideoFrames DecodeUvf(std::string_view bytes);
void WriteUvf(const std::string &path, const VideoFrames &video);
VideoFrames ReadUvf(const std::string &path);

// ---------------------------------------------------------------------------
// Synthetic utterances.

struct SynthUtterance {
  std::vector<double> audio;
  VideoFrames lip;
  VideoFrames tongue;
  std::vector<double> envelope;  // amplitude envelope at each video frame
  std::vector<double> f1_hz;     // first formant at each video frame
};

/// Harmonic source (pitch 90-220 Hz) shaped by two moving formants and a
/// syllabic envelope, with lip and tongue videos at 81.5 fps that follow the
/// envelope and first formant. Pure function of (seed, duration).
SynthUtterance SynthesizeUtterance(std::uint64_t seed, double duration_s,
                                   int sample_rate = 16000);

// ---------------------------------------------------------------------------
// Manifests.

enum class Split { kTrain, kValid, kTest };
std::string_view SplitName(Split split);
Split ParseSplit(std::string_view name);

struct UtteranceRecord {
  std::string utt_id;
  std::string clean_wav;
  std::string lip_uvf;
  std::string tongue_uvf;
  Split split = Split::kTrain;
};

struct NoiseAssignment {
  std::string utt_id;
  NoiseClass noise_class = NoiseClass::kWhite;
  double snr_db = 0.0;
  std::uint64_t seed = 0;
};

struct CorpusManifest {
  std::vector<UtteranceRecord> records;
  std::vector<NoiseAssignment> noise_plan;
  /// Directory relative paths are resolved against.
  std::string base_dir;

  void Validate() const;
  std::vector<const UtteranceRecord *> BySplit(Split split) const;
  const NoiseAssignment &NoiseFor(const std::string &utt_id) const;
  std::string Resolve(const std::string &path) const;
};

CorpusManifest ReadManifest(const std::string &manifest_tsv,
                            const std::string &noise_plan_tsv);
void WriteManifest(const CorpusManifest &manifest,
                   const std::string &manifest_tsv,
                   const std::string &noise_plan_tsv);

struct SynthCorpusOptions {
  std::size_t n_train = 50;
  std::size_t n_valid = 10;
  std::size_t n_test = 10;
  std::uint64_t seed = 1;
  double min_duration_s = 1.0;
  double max_duration_s = 3.0;
};

/// Writes wav/, video/, manifest.tsv and noise_plan.tsv under `out_dir`.
CorpusManifest WriteSyntheticCorpus(const std::string &out_dir,
                                    const SynthCorpusOptions &options);

// ---------------------------------------------------------------------------
// Prepared data and batches.

/// Per-utterance state that stays fixed across epochs: mixed audio, both
/// spectrograms, and articulation frames with their statistics.
struct PreparedUtterance {
  std::string utt_id;
  std::vector<double> clean;
  std::vector<double> noisy;
  ComplexSpectrogram clean_spec;
  ComplexSpectrogram noisy_spec;
  ArticulationSequence lip;
  std::optional<ArticulationSequence> tongue;

  /// min(T_audio, T_video).
  std::size_t NumFrames() const;
};

struct PrepareOptions {
  bool load_tongue = true;
  /// Mix at this SNR instead of the noise plan's.
  std::optional<double> snr_override;
  std::size_t video_height = kVideoHeight;
  std::size_t video_width = kVideoWidth;
};

/// Loads clean audio and video, mixes per the noise plan, computes both
/// spectrograms and the articulation statistics.
PreparedUtterance PrepareUtterance(const CorpusManifest &manifest,
                                   const UtteranceRecord &record,
                                   const SpectralConfig &config,
                                   const PrepareOptions &options = {});

struct MaskTarget {
  double epsilon = kDefaultMaskEpsilon;
  double bound = 1.0;
};

struct TrainingBatch {
  std::size_t num_frames = 0;  // T_b
  std::vector<std::string> utt_ids;
  std::vector<ComplexSpectrogram> noisy;
  std::vector<ComplexSpectrogram> clean;
  std::vector<ComplexMask> ideal_masks;
  std::vector<ArticulationSequence> lips;
  std::vector<ArticulationSequence> tongues;  // empty when not loaded
  std::vector<std::size_t> crop_offsets;

  std::size_t size() const { return noisy.size(); }
};

inline constexpr std::size_t kMinBatchFrames = 8;

/// Crops every item to the shortest effective length in the batch at a
/// seeded offset shared by its audio and video.
TrainingBatch AssembleBatch(std::span<const PreparedUtterance *const> utts,
                            std::uint64_t seed, const SpectralConfig &config,
                            const MaskTarget &target = {});

}  // namespace avse

#endif  // AVSE_CORPUS_H_
