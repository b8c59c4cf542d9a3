// core/include/avse/layers.h

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

#ifndef AVSE_LAYERS_H_
#define AVSE_LAYERS_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "avse/tensor.h"

namespace avse {

/// A trainable tensor and its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Non-trainable state saved with a checkpoint (batch-norm running stats).
struct Buffer {
  std::string name;
  Tensor *value = nullptr;
};

enum class Mode { kTrain, kInference };

/// Layers cache what backward needs during Forward; Backward must follow
/// the matching Forward and accumulates into parameter gradients.
class Layer {
 public:
  virtual ~Layer() = default;
  virtual Tensor Forward(const Tensor &x, Mode mode) = 0;
  virtual Tensor Backward(const Tensor &dy) = 0;
  virtual void CollectParameters(std::vector<Parameter *> *) {}
  virtual void CollectBuffers(std::vector<Buffer> *) {}
};

/// Fills parameters with U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
void InitUniformFanIn(Parameter *p, std::size_t fan_in, std::uint64_t seed);

/// 3x3 convolution over (time, freq) of b x c x t x f maps; time stride 1,
/// frequency stride `freq_stride`, padding 1 on both axes.
class Conv2d : public Layer {
 public:
  Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
         std::size_t freq_stride, bool bias, bool propagate_down = true);
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  void CollectParameters(std::vector<Parameter *> *out) override;
  std::size_t OutputFreq(std::size_t in_freq) const;

 private:
  std::size_t in_channels_, out_channels_, freq_stride_;
  bool has_bias_, propagate_down_;
  Parameter weight_, bias_;  // weight: out x (in * 9)
  Tensor input_;
};

/// Transposed 3x3 convolution; the output frequency size is fixed at
/// Forward time and must satisfy (out - 1) / stride + 1 == in.
class ConvTranspose2d : public Layer {
 public:
  ConvTranspose2d(std::string name, std::size_t in_channels,
                  std::size_t out_channels, std::size_t freq_stride);
  void SetOutputFreq(std::size_t f) { out_freq_ = f; }
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  void CollectParameters(std::vector<Parameter *> *out) override;

 private:
  std::size_t in_channels_, out_channels_, freq_stride_, out_freq_ = 0;
  Parameter weight_;  // in x (out * 9)
  Tensor input_;
};

/// 3x3x3 convolution over (t, h, w) of b x c x t x h x w video; stride
/// (1, 2, 2), padding 1.
class Conv3d : public Layer {
 public:
  Conv3d(std::string name, std::size_t in_channels, std::size_t out_channels,
         bool propagate_down = true);
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  void CollectParameters(std::vector<Parameter *> *out) override;

 private:
  std::size_t in_channels_, out_channels_;
  bool propagate_down_;
  Parameter weight_;  // out x (in * 27)
  Tensor input_;
};

/// Per-channel normalization over every axis but axis 1. Batch statistics
/// in training mode, running statistics at inference.
class BatchNorm : public Layer {
 public:
  BatchNorm(std::string name, std::size_t channels, double momentum = 0.1,
            double eps = 1e-5);
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  void CollectParameters(std::vector<Parameter *> *out) override;
  void CollectBuffers(std::vector<Buffer> *out) override;

 private:
  std::string name_;
  std::size_t channels_;
  double momentum_, eps_;
  Parameter gamma_, beta_;
  Tensor running_mean_, running_var_;
  Mode mode_ = Mode::kTrain;
  Tensor normalized_;
  std::vector<double> inv_std_;
};

class LeakyRelu : public Layer {
 public:
  explicit LeakyRelu(double slope) : slope_(slope) {}
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;

 private:
  double slope_;
  Tensor output_;
};

/// Halves the last axis by averaging pairs; an odd tail is kept as is
/// (ceil semantics).
class FreqAvgPool : public Layer {
 public:
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  static std::size_t OutputFreq(std::size_t f) { return (f + 1) / 2; }

 private:
  Shape in_shape_;
};

/// Nearest-neighbour x2 along the last axis, cropped to `target`.
class FreqUpsample : public Layer {
 public:
  void SetTarget(std::size_t target) { target_ = target; }
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;

 private:
  std::size_t target_ = 0;
  Shape in_shape_;
};

/// Channel mixing y[:, o, ...] = sum_i W[o, i] x[:, i, ...] + b[o]; the
/// per-bin linear layer.
class PointwiseLinear : public Layer {
 public:
  PointwiseLinear(std::string name, std::size_t in_channels,
                  std::size_t out_channels);
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  void CollectParameters(std::vector<Parameter *> *out) override;

 private:
  std::size_t in_channels_, out_channels_;
  Parameter weight_, bias_;
  Tensor input_;
};

/// Unidirectional LSTM over b x 1 x t x d sequences, producing b x 1 x t x h.
/// Gate order i, f, g, o.
class Lstm : public Layer {
 public:
  Lstm(std::string name, std::size_t input_size, std::size_t hidden_size);
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;
  void CollectParameters(std::vector<Parameter *> *out) override;

 private:
  std::size_t input_size_, hidden_size_;
  Parameter w_ih_, w_hh_, bias_;
  Tensor input_;
  std::size_t batch_ = 0, frames_ = 0;
  // Per step, column-major blocks of (4h x b) gates and (h x b) states.
  std::vector<double> gates_, cells_, hidden_;
};

/// y = bound * tanh(x).
class ScaledTanh : public Layer {
 public:
  explicit ScaledTanh(double bound) : bound_(bound) {}
  Tensor Forward(const Tensor &x, Mode mode) override;
  Tensor Backward(const Tensor &dy) override;

 private:
  double bound_;
  Tensor output_;
};

/// b x c x t x f -> b x c x t x 1 (mean over f).
Tensor MeanOverFreq(const Tensor &x);
Tensor MeanOverFreqBackward(const Tensor &dy, std::size_t freq);
/// b x c x t x 1 -> b x c x t x f.
Tensor BroadcastFreq(const Tensor &x, std::size_t freq);
Tensor BroadcastFreqBackward(const Tensor &dy);
/// b x c x t x f <-> b x 1 x t x (c * f), channel-major inside a frame.
Tensor FramesToSequence(const Tensor &x);
Tensor SequenceToFrames(const Tensor &seq, std::size_t channels,
                        std::size_t freq);
/// Adds `src` into `dst`; `dst` may be empty, in which case it becomes a copy.
void Accumulate(Tensor *dst, const Tensor &src);
/// Returns false if any element is NaN or infinite.
bool AllFinite(const Tensor &t);

}  // namespace avse

#endif  // AVSE_LAYERS_H_
