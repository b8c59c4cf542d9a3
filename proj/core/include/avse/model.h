// core/include/avse/model.h

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

#ifndef AVSE_MODEL_H_
#define AVSE_MODEL_H_

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "avse/corpus.h"
#include "avse/layers.h"
#include "avse/spectral.h"
#include "avse/tensor.h"

namespace avse {

enum class ModelKind { kTeacher, kStudent };
std::string_view ModelKindName(ModelKind kind);
ModelKind ParseModelKind(std::string_view name);

struct ModelConfig {
  std::size_t base_channels = 16;
  std::vector<std::size_t> articulation_channels{8, 16, 32};
  std::size_t n_feature_blocks = 7;
  std::size_t lstm_layers = 2;
  std::size_t lstm_hidden = 256;
  double mask_bound = 1.0;
  double leaky_slope = 0.2;
  // Empty means every point from CaptureTracePoints.
  std::vector<std::string> trace_points;
  // Input geometry: spectrogram bins and articulation frame size.
  std::size_t freq_bins = 257;
  std::size_t video_height = kVideoHeight;
  std::size_t video_width = kVideoWidth;

  /// Throws ConfigError on inconsistent settings.
  void Validate() const;
  /// False when block or LSTM counts differ from 7 and 2.
  bool IsCanonical() const;
  /// The trace list actually captured (defaults filled in).
  std::vector<std::string> ResolvedTracePoints() const;

  /// Audio frequency size and channel width at encoder level k (0 is the
  /// conv block, 1..n the feature blocks).
  std::size_t AudioFreq(std::size_t level) const;
  std::size_t AudioChannels(std::size_t level) const;
  /// Pseudo-frequency size of the articulation map at level k.
  std::size_t ArticulationFreq(std::size_t level) const;
};

/// Every capture point for `config`, in execution order: encoder.0..n,
/// lstm.0..L-1, decoder.0..n (decoder.0 is the deepest layer).
std::vector<std::string> CaptureTracePoints(const ModelConfig &config);

std::vector<std::pair<std::string, std::string>> ModelConfigToKeyValues(
    const ModelConfig &config);
/// Reads `model.*` keys; anything else in `values` is ignored. Throws
/// ConfigError on malformed values.
ModelConfig ModelConfigFromKeyValues(
    const std::map<std::string, std::string> &values);

struct FeatureTrace {
  std::vector<std::string> names;
  std::vector<Tensor> features;  // b x c x t x f each

  std::size_t size() const { return names.size(); }
  const Tensor *Find(const std::string &name) const;
};

struct NetworkOutput {
  Tensor mask_tensor;  // b x 2 x t x f, real then imag
  std::vector<ComplexMask> masks;
  std::vector<ComplexSpectrogram> enhanced;
  FeatureTrace trace;
};

/// Packs spectrograms into b x 2 x t x f; all items need equal size.
Tensor SpectrogramBatch(std::span<const ComplexSpectrogram> specs);
/// Packs articulation sequences into b x 3 x t x h x w.
Tensor ArticulationBatch(std::span<const ArticulationSequence> seqs);
/// Item `n` of a b x 2 x t x f tensor as a mask.
ComplexMask MaskFromTensor(const Tensor &t, std::size_t n, double bound);

class Sequential;

/// Teacher (audio + lip + tongue) or student (audio + lip) network. One
/// instance must not run Forward/Backward concurrently.
class AvseNet {
 public:
  AvseNet(ModelKind kind, const ModelConfig &config, std::uint64_t seed);
  ~AvseNet();
  AvseNet(AvseNet &&) noexcept;
  AvseNet &operator=(AvseNet &&) noexcept;

  ModelKind kind() const { return kind_; }
  const ModelConfig &config() const { return config_; }

  /// Tensor-level pass. `tongues` is ignored by a student. Returns the
  /// b x 2 x t x f mask; fills `trace` when non-null.
  Tensor ForwardTensors(const Tensor &audio, const Tensor &lips,
                        const Tensor &tongues, Mode mode,
                        FeatureTrace *trace);
  /// Back-propagates from the mask gradient plus optional per-trace-point
  /// gradients (aligned with ResolvedTracePoints(); empty entries skipped).
  /// Accumulates into parameter gradients.
  void Backward(const Tensor &grad_mask,
                const std::vector<Tensor> *trace_grads = nullptr);

  std::vector<Parameter *> Parameters();
  std::vector<Buffer> Buffers();
  void ZeroGrad();
  std::size_t NumParameters();
  /// FNV-1a over the bytes of every parameter and buffer.
  std::uint64_t Checksum();

 private:
  void Build(std::uint64_t seed);

  ModelKind kind_;
  ModelConfig config_;
  std::vector<std::string> trace_points_;

  std::unique_ptr<Sequential> audio_in_;
  std::vector<std::unique_ptr<Sequential>> audio_blocks_;
  // [stream][level]; stream 0 lip, 1 tongue. Level 0 is the 3-D front end.
  std::vector<std::vector<std::unique_ptr<Sequential>>> art_;
  std::vector<std::unique_ptr<PointwiseLinear>> fusion_;
  std::vector<std::unique_ptr<PointwiseLinear>> project_;
  std::vector<std::unique_ptr<Lstm>> lstm_;
  std::vector<std::unique_ptr<Sequential>> decoder_;
  std::unique_ptr<PointwiseLinear> head_;
  std::unique_ptr<ScaledTanh> head_act_;

  // Shapes remembered for Backward.
  std::size_t art_front_freq_ = 0;
  Shape art_front_shape_;
  std::vector<Tensor> skips_;
};

AvseNet BuildTeacher(const ModelConfig &config, std::uint64_t seed);
AvseNet BuildStudent(const ModelConfig &config, std::uint64_t seed);

/// Forward over a batch of equal-length items; mask and enhanced output per
/// item, enhanced computed with ApplyMask.
NetworkOutput TeacherForward(AvseNet &net,
                             std::span<const ComplexSpectrogram> noisy,
                             std::span<const ArticulationSequence> lips,
                             std::span<const ArticulationSequence> tongues,
                             Mode mode = Mode::kInference);
NetworkOutput StudentForward(AvseNet &net,
                             std::span<const ComplexSpectrogram> noisy,
                             std::span<const ArticulationSequence> lips,
                             Mode mode = Mode::kInference);

}  // namespace avse

#endif  // AVSE_MODEL_H_
