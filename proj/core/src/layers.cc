// core/src/layers.cc

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

#include "avse/layers.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

#include "avse/error.h"
#include "avse/random.h"

namespace avse {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ColMat = Eigen::MatrixXd;
using MapRow = Eigen::Map<RowMat>;
using CMapRow = Eigen::Map<const RowMat>;
using Stride = Eigen::OuterStride<>;

void ExpectRank(const Tensor &x, std::size_t rank, const char *layer) {
  if (x.rank() != rank)
    throw ShapeError(std::string(layer) + ": expected rank " + std::to_string(rank) +
                     " input, got " + ShapeString(x.shape()));
}

void ExpectChannels(const Tensor &x, std::size_t channels, const std::string &layer) {
  if (x.dim(1) != channels)
    throw ShapeError(layer + ": expected " + std::to_string(channels) +
                     " channels, got " + ShapeString(x.shape()));
}

Parameter MakeParam(const std::string &name, Shape shape) {
  Parameter p;
  p.name = name;
  p.value = Tensor(shape);
  p.grad = Tensor(std::move(shape));
  return p;
}

// Output positions o whose input index o * stride + k - 1 lies in [0, n).
struct ValidRange {
  std::size_t lo, hi;
};

ValidRange Valid(std::size_t k, std::size_t stride, std::size_t n, std::size_t out) {
  const std::size_t lo = k == 0 ? 1 : 0;
  // o * stride + k - 1 <= n - 1  <=>  o <= (n - k) / stride
  const std::size_t hi = k > n ? 0 : std::min(out, (n - k) / stride + 1);
  return {lo, std::max(lo, hi)};
}

// Geometry of a 3x3 kernel over a (time x freq) image with padding 1, time
// stride 1 and frequency stride `s`; columns index output positions
// (t, fo) and rows (c, kt, kf).
struct Patch2d {
  std::size_t channels, frames, image_freq, out_freq, stride;

  std::size_t Rows() const { return channels * 9; }
  std::size_t Cols() const { return frames * out_freq; }

  void Im2Col(const double *image, double *col) const {
    const std::size_t cols = Cols();
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t kt = 0; kt < 3; ++kt)
        for (std::size_t kf = 0; kf < 3; ++kf) {
          double *dst = col + ((c * 3 + kt) * 3 + kf) * cols;
          for (std::size_t t = 0; t < frames; ++t) {
            const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + kt) - 1;
            double *row = dst + t * out_freq;
            if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(frames)) {
              std::fill_n(row, out_freq, 0.0);
              continue;
            }
            const double *src = image + (c * frames + static_cast<std::size_t>(ti)) * image_freq;
            const ValidRange r = Valid(kf, stride, image_freq, out_freq);
            std::fill_n(row, r.lo, 0.0);
            for (std::size_t fo = r.lo; fo < r.hi; ++fo) row[fo] = src[fo * stride + kf - 1];
            std::fill(row + r.hi, row + out_freq, 0.0);
          }
        }
  }

  void Col2Im(const double *col, double *image) const {
    const std::size_t cols = Cols();
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t kt = 0; kt < 3; ++kt)
        for (std::size_t kf = 0; kf < 3; ++kf) {
          const double *src = col + ((c * 3 + kt) * 3 + kf) * cols;
          for (std::size_t t = 0; t < frames; ++t) {
            const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + kt) - 1;
            if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(frames)) continue;
            double *dst = image + (c * frames + static_cast<std::size_t>(ti)) * image_freq;
            const double *row = src + t * out_freq;
            const ValidRange r = Valid(kf, stride, image_freq, out_freq);
            for (std::size_t fo = r.lo; fo < r.hi; ++fo) dst[fo * stride + kf - 1] += row[fo];
          }
        }
  }
};

// 3x3x3 kernel, stride (1, 2, 2), padding 1, for a single output frame.
struct Patch3d {
  std::size_t channels, frames, height, width, out_height, out_width;

  std::size_t Rows() const { return channels * 27; }
  std::size_t Cols() const { return out_height * out_width; }

  void Im2Col(const double *video, std::size_t t, double *col) const {
    const std::size_t cols = Cols();
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t kt = 0; kt < 3; ++kt) {
        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + kt) - 1;
        const bool valid_t = ti >= 0 && ti < static_cast<std::ptrdiff_t>(frames);
        const double *frame =
            valid_t ? video + (c * frames + static_cast<std::size_t>(ti)) * height * width
                    : nullptr;
        for (std::size_t kh = 0; kh < 3; ++kh) {
          const ValidRange rh = Valid(kh, 2, height, out_height);
          for (std::size_t kw = 0; kw < 3; ++kw) {
            double *dst = col + (((c * 3 + kt) * 3 + kh) * 3 + kw) * cols;
            std::fill_n(dst, cols, 0.0);
            if (!valid_t) continue;
            const ValidRange rw = Valid(kw, 2, width, out_width);
            for (std::size_t ho = rh.lo; ho < rh.hi; ++ho) {
              const double *src = frame + (2 * ho + kh - 1) * width;
              double *row = dst + ho * out_width;
              for (std::size_t wo = rw.lo; wo < rw.hi; ++wo) row[wo] = src[2 * wo + kw - 1];
            }
          }
        }
      }
  }

  void Col2Im(const double *col, std::size_t t, double *video) const {
    const std::size_t cols = Cols();
    for (std::size_t c = 0; c < channels; ++c)
      for (std::size_t kt = 0; kt < 3; ++kt) {
        const std::ptrdiff_t ti = static_cast<std::ptrdiff_t>(t + kt) - 1;
        if (ti < 0 || ti >= static_cast<std::ptrdiff_t>(frames)) continue;
        double *frame = video + (c * frames + static_cast<std::size_t>(ti)) * height * width;
        for (std::size_t kh = 0; kh < 3; ++kh) {
          const ValidRange rh = Valid(kh, 2, height, out_height);
          for (std::size_t kw = 0; kw < 3; ++kw) {
            const double *src = col + (((c * 3 + kt) * 3 + kh) * 3 + kw) * cols;
            const ValidRange rw = Valid(kw, 2, width, out_width);
            for (std::size_t ho = rh.lo; ho < rh.hi; ++ho) {
              double *dst = frame + (2 * ho + kh - 1) * width;
              const double *row = src + ho * out_width;
              for (std::size_t wo = rw.lo; wo < rw.hi; ++wo) dst[2 * wo + kw - 1] += row[wo];
            }
          }
        }
      }
  }
};

double Sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void InitUniformFanIn(Parameter *p, std::size_t fan_in, std::uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
  for (double &v : p->value.values()) v = Uniform(rng, -bound, bound);
  p->grad.Resize(p->value.shape());
}

void Accumulate(Tensor *dst, const Tensor &src) {
  if (dst->empty()) {
    *dst = src;
    return;
  }
  if (!dst->SameShape(src))
    throw ShapeError("accumulate: " + ShapeString(dst->shape()) + " vs " +
                     ShapeString(src.shape()));
  for (std::size_t i = 0; i < src.size(); ++i) (*dst)[i] += src[i];
}

bool AllFinite(const Tensor &t) {
  for (double v : t.values())
    if (!std::isfinite(v)) return false;
  return true;
}

// ---------------------------------------------------------------------------

Conv2d::Conv2d(std::string name, std::size_t in_channels, std::size_t out_channels,
               std::size_t freq_stride, bool bias, bool propagate_down)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      freq_stride_(freq_stride),
      has_bias_(bias),
      propagate_down_(propagate_down),
      weight_(MakeParam(name + ".weight", {out_channels, in_channels * 9})),
      bias_(MakeParam(name + ".bias", {out_channels})) {}

std::size_t Conv2d::OutputFreq(std::size_t in_freq) const {
  return (in_freq - 1) / freq_stride_ + 1;
}

void Conv2d::CollectParameters(std::vector<Parameter *> *out) {
  out->push_back(&weight_);
  if (has_bias_) out->push_back(&bias_);
}

Tensor Conv2d::Forward(const Tensor &x, Mode) {
  ExpectRank(x, 4, "conv2d");
  ExpectChannels(x, in_channels_, weight_.name);
  input_ = x;
  const std::size_t batch = x.dim(0), frames = x.dim(2), freq = x.dim(3);
  const Patch2d patch{in_channels_, frames, freq, OutputFreq(freq), freq_stride_};
  Tensor y({batch, out_channels_, frames, patch.out_freq});
  RowMat col(patch.Rows(), patch.Cols());
  CMapRow w(weight_.value.data(), out_channels_, patch.Rows());
  for (std::size_t n = 0; n < batch; ++n) {
    patch.Im2Col(x.data() + n * in_channels_ * frames * freq, col.data());
    MapRow out(y.data() + n * out_channels_ * patch.Cols(), out_channels_, patch.Cols());
    out.noalias() = w * col;
    if (has_bias_)
      for (std::size_t o = 0; o < out_channels_; ++o) out.row(o).array() += bias_.value[o];
  }
  return y;
}

Tensor Conv2d::Backward(const Tensor &dy) {
  const std::size_t batch = input_.dim(0), frames = input_.dim(2), freq = input_.dim(3);
  const Patch2d patch{in_channels_, frames, freq, OutputFreq(freq), freq_stride_};
  Tensor dx;
  if (propagate_down_) dx.Resize(input_.shape());
  RowMat col(patch.Rows(), patch.Cols());
  RowMat dcol;
  CMapRow w(weight_.value.data(), out_channels_, patch.Rows());
  MapRow dw(weight_.grad.data(), out_channels_, patch.Rows());
  for (std::size_t n = 0; n < batch; ++n) {
    patch.Im2Col(input_.data() + n * in_channels_ * frames * freq, col.data());
    CMapRow g(dy.data() + n * out_channels_ * patch.Cols(), out_channels_, patch.Cols());
    dw.noalias() += g * col.transpose();
    if (has_bias_)
      for (std::size_t o = 0; o < out_channels_; ++o) bias_.grad[o] += g.row(o).sum();
    if (propagate_down_) {
      dcol.noalias() = w.transpose() * g;
      patch.Col2Im(dcol.data(), dx.data() + n * in_channels_ * frames * freq);
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------

ConvTranspose2d::ConvTranspose2d(std::string name, std::size_t in_channels,
                                 std::size_t out_channels, std::size_t freq_stride)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      freq_stride_(freq_stride),
      weight_(MakeParam(name + ".weight", {in_channels, out_channels * 9})) {}

void ConvTranspose2d::CollectParameters(std::vector<Parameter *> *out) {
  out->push_back(&weight_);
}

Tensor ConvTranspose2d::Forward(const Tensor &x, Mode) {
  ExpectRank(x, 4, "conv_transpose2d");
  ExpectChannels(x, in_channels_, weight_.name);
  const std::size_t batch = x.dim(0), frames = x.dim(2), freq = x.dim(3);
  if (out_freq_ == 0 || (out_freq_ - 1) / freq_stride_ + 1 != freq)
    throw ShapeError(weight_.name + ": output size " + std::to_string(out_freq_) +
                     " incompatible with input size " + std::to_string(freq));
  input_ = x;
  const Patch2d patch{out_channels_, frames, out_freq_, freq, freq_stride_};
  Tensor y({batch, out_channels_, frames, out_freq_});
  RowMat col(patch.Rows(), patch.Cols());
  CMapRow w(weight_.value.data(), in_channels_, patch.Rows());
  for (std::size_t n = 0; n < batch; ++n) {
    CMapRow xin(x.data() + n * in_channels_ * patch.Cols(), in_channels_, patch.Cols());
    col.noalias() = w.transpose() * xin;
    patch.Col2Im(col.data(), y.data() + n * out_channels_ * frames * out_freq_);
  }
  return y;
}

Tensor ConvTranspose2d::Backward(const Tensor &dy) {
  const std::size_t batch = input_.dim(0), frames = input_.dim(2), freq = input_.dim(3);
  const Patch2d patch{out_channels_, frames, out_freq_, freq, freq_stride_};
  Tensor dx(input_.shape());
  RowMat dcol(patch.Rows(), patch.Cols());
  CMapRow w(weight_.value.data(), in_channels_, patch.Rows());
  MapRow dw(weight_.grad.data(), in_channels_, patch.Rows());
  for (std::size_t n = 0; n < batch; ++n) {
    patch.Im2Col(dy.data() + n * out_channels_ * frames * out_freq_, dcol.data());
    CMapRow xin(input_.data() + n * in_channels_ * patch.Cols(), in_channels_, patch.Cols());
    dw.noalias() += xin * dcol.transpose();
    MapRow dxin(dx.data() + n * in_channels_ * patch.Cols(), in_channels_, patch.Cols());
    dxin.noalias() = w * dcol;
  }
  return dx;
}

// ---------------------------------------------------------------------------

Conv3d::Conv3d(std::string name, std::size_t in_channels, std::size_t out_channels,
               bool propagate_down)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      propagate_down_(propagate_down),
      weight_(MakeParam(name + ".weight", {out_channels, in_channels * 27})) {}

void Conv3d::CollectParameters(std::vector<Parameter *> *out) { out->push_back(&weight_); }

Tensor Conv3d::Forward(const Tensor &x, Mode) {
  ExpectRank(x, 5, "conv3d");
  ExpectChannels(x, in_channels_, weight_.name);
  input_ = x;
  const std::size_t batch = x.dim(0), frames = x.dim(2);
  const Patch3d patch{in_channels_, frames, x.dim(3), x.dim(4),
                      (x.dim(3) - 1) / 2 + 1, (x.dim(4) - 1) / 2 + 1};
  Tensor y({batch, out_channels_, frames, patch.out_height, patch.out_width});
  RowMat col(patch.Rows(), patch.Cols());
  CMapRow w(weight_.value.data(), out_channels_, patch.Rows());
  const std::size_t in_item = in_channels_ * frames * patch.height * patch.width;
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t t = 0; t < frames; ++t) {
      patch.Im2Col(x.data() + n * in_item, t, col.data());
      Eigen::Map<RowMat, 0, Stride> out(
          y.data() + (n * out_channels_ * frames + t) * patch.Cols(), out_channels_,
          patch.Cols(), Stride(frames * patch.Cols()));
      out.noalias() = w * col;
    }
  return y;
}

Tensor Conv3d::Backward(const Tensor &dy) {
  const std::size_t batch = input_.dim(0), frames = input_.dim(2);
  const Patch3d patch{in_channels_, frames, input_.dim(3), input_.dim(4),
                      (input_.dim(3) - 1) / 2 + 1, (input_.dim(4) - 1) / 2 + 1};
  Tensor dx;
  if (propagate_down_) dx.Resize(input_.shape());
  RowMat col(patch.Rows(), patch.Cols());
  RowMat dcol;
  CMapRow w(weight_.value.data(), out_channels_, patch.Rows());
  MapRow dw(weight_.grad.data(), out_channels_, patch.Rows());
  const std::size_t in_item = in_channels_ * frames * patch.height * patch.width;
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t t = 0; t < frames; ++t) {
      patch.Im2Col(input_.data() + n * in_item, t, col.data());
      Eigen::Map<const RowMat, 0, Stride> g(
          dy.data() + (n * out_channels_ * frames + t) * patch.Cols(), out_channels_,
          patch.Cols(), Stride(frames * patch.Cols()));
      dw.noalias() += g * col.transpose();
      if (propagate_down_) {
        dcol.noalias() = w.transpose() * g;
        patch.Col2Im(dcol.data(), t, dx.data() + n * in_item);
      }
    }
  return dx;
}

// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(std::string name, std::size_t channels, double momentum, double eps)
    : name_(std::move(name)),
      channels_(channels),
      momentum_(momentum),
      eps_(eps),
      gamma_(MakeParam(name_ + ".gamma", {channels})),
      beta_(MakeParam(name_ + ".beta", {channels})),
      running_mean_({channels}, 0.0),
      running_var_({channels}, 1.0) {
  std::fill(gamma_.value.values().begin(), gamma_.value.values().end(), 1.0);
}

void BatchNorm::CollectParameters(std::vector<Parameter *> *out) {
  out->push_back(&gamma_);
  out->push_back(&beta_);
}

void BatchNorm::CollectBuffers(std::vector<Buffer> *out) {
  out->push_back({name_ + ".running_mean", &running_mean_});
  out->push_back({name_ + ".running_var", &running_var_});
}

Tensor BatchNorm::Forward(const Tensor &x, Mode mode) {
  if (x.rank() < 2) throw ShapeError(name_ + ": input rank < 2");
  ExpectChannels(x, channels_, name_);
  mode_ = mode;
  const std::size_t batch = x.dim(0);
  const std::size_t inner = x.size() / (batch * channels_);
  const double count = static_cast<double>(batch * inner);
  normalized_.Resize(x.shape());
  inv_std_.assign(channels_, 0.0);
  Tensor y(x.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    double mean, var;
    if (mode == Mode::kTrain) {
      double sum = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double *p = x.data() + (n * channels_ + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) sum += p[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const double *p = x.data() + (n * channels_ + c) * inner;
        for (std::size_t i = 0; i < inner; ++i) sq += (p[i] - mean) * (p[i] - mean);
      }
      var = sq / count;
      const double unbiased = count > 1 ? sq / (count - 1) : var;
      running_mean_[c] = (1 - momentum_) * running_mean_[c] + momentum_ * mean;
      running_var_[c] = (1 - momentum_) * running_var_[c] + momentum_ * unbiased;
    } else {
      mean = running_mean_[c];
      var = running_var_[c];
    }
    const double inv = 1.0 / std::sqrt(var + eps_);
    inv_std_[c] = inv;
    const double g = gamma_.value[c], b = beta_.value[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        const double xh = (x[off + i] - mean) * inv;
        normalized_[off + i] = xh;
        y[off + i] = g * xh + b;
      }
    }
  }
  return y;
}

Tensor BatchNorm::Backward(const Tensor &dy) {
  const std::size_t batch = dy.dim(0);
  const std::size_t inner = dy.size() / (batch * channels_);
  const double count = static_cast<double>(batch * inner);
  Tensor dx(dy.shape());
  for (std::size_t c = 0; c < channels_; ++c) {
    double sum_dy = 0.0, sum_dy_xh = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        sum_dy += dy[off + i];
        sum_dy_xh += dy[off + i] * normalized_[off + i];
      }
    }
    gamma_.grad[c] += sum_dy_xh;
    beta_.grad[c] += sum_dy;
    const double scale = gamma_.value[c] * inv_std_[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * channels_ + c) * inner;
      for (std::size_t i = 0; i < inner; ++i) {
        if (mode_ == Mode::kTrain)
          dx[off + i] = scale * (dy[off + i] - sum_dy / count -
                                 normalized_[off + i] * sum_dy_xh / count);
        else
          dx[off + i] = scale * dy[off + i];
      }
    }
  }
  return dx;
}

// ---------------------------------------------------------------------------

Tensor LeakyRelu::Forward(const Tensor &x, Mode) {
  output_ = x;
  for (double &v : output_.values())
    if (v < 0) v *= slope_;
  return output_;
}

Tensor LeakyRelu::Backward(const Tensor &dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i)
    if (output_[i] < 0) dx[i] *= slope_;
  return dx;
}

Tensor FreqAvgPool::Forward(const Tensor &x, Mode) {
  in_shape_ = x.shape();
  const std::size_t f = x.shape().back(), fo = OutputFreq(f);
  Shape shape = x.shape();
  shape.back() = fo;
  Tensor y(shape);
  const std::size_t rows = x.size() / f;
  for (std::size_t r = 0; r < rows; ++r) {
    const double *src = x.data() + r * f;
    double *dst = y.data() + r * fo;
    for (std::size_t k = 0; k < fo; ++k)
      dst[k] = 2 * k + 1 < f ? 0.5 * (src[2 * k] + src[2 * k + 1]) : src[2 * k];
  }
  return y;
}

Tensor FreqAvgPool::Backward(const Tensor &dy) {
  Tensor dx(in_shape_);
  const std::size_t f = in_shape_.back(), fo = OutputFreq(f);
  const std::size_t rows = dx.size() / f;
  for (std::size_t r = 0; r < rows; ++r) {
    const double *src = dy.data() + r * fo;
    double *dst = dx.data() + r * f;
    for (std::size_t k = 0; k < fo; ++k) {
      if (2 * k + 1 < f) {
        dst[2 * k] = 0.5 * src[k];
        dst[2 * k + 1] = 0.5 * src[k];
      } else {
        dst[2 * k] = src[k];
      }
    }
  }
  return dx;
}

Tensor FreqUpsample::Forward(const Tensor &x, Mode) {
  const std::size_t f = x.shape().back();
  if (target_ == 0 || target_ > 2 * f)
    throw ShapeError("upsample: cannot reach " + std::to_string(target_) + " bins from " +
                     std::to_string(f));
  in_shape_ = x.shape();
  Shape shape = x.shape();
  shape.back() = target_;
  Tensor y(shape);
  const std::size_t rows = x.size() / f;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < target_; ++k) y[r * target_ + k] = x[r * f + k / 2];
  return y;
}

Tensor FreqUpsample::Backward(const Tensor &dy) {
  Tensor dx(in_shape_);
  const std::size_t f = in_shape_.back();
  const std::size_t rows = dx.size() / f;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = 0; k < target_; ++k) dx[r * f + k / 2] += dy[r * target_ + k];
  return dx;
}

// ---------------------------------------------------------------------------

PointwiseLinear::PointwiseLinear(std::string name, std::size_t in_channels,
                                 std::size_t out_channels)
    : in_channels_(in_channels),
      out_channels_(out_channels),
      weight_(MakeParam(name + ".weight", {out_channels, in_channels})),
      bias_(MakeParam(name + ".bias", {out_channels})) {}

void PointwiseLinear::CollectParameters(std::vector<Parameter *> *out) {
  out->push_back(&weight_);
  out->push_back(&bias_);
}

Tensor PointwiseLinear::Forward(const Tensor &x, Mode) {
  if (x.rank() < 2) throw ShapeError(weight_.name + ": input rank < 2");
  ExpectChannels(x, in_channels_, weight_.name);
  input_ = x;
  const std::size_t batch = x.dim(0), inner = x.size() / (batch * in_channels_);
  Shape shape = x.shape();
  shape[1] = out_channels_;
  Tensor y(shape);
  CMapRow w(weight_.value.data(), out_channels_, in_channels_);
  for (std::size_t n = 0; n < batch; ++n) {
    CMapRow xin(x.data() + n * in_channels_ * inner, in_channels_, inner);
    MapRow out(y.data() + n * out_channels_ * inner, out_channels_, inner);
    out.noalias() = w * xin;
    for (std::size_t o = 0; o < out_channels_; ++o) out.row(o).array() += bias_.value[o];
  }
  return y;
}

Tensor PointwiseLinear::Backward(const Tensor &dy) {
  const std::size_t batch = input_.dim(0), inner = input_.size() / (batch * in_channels_);
  Tensor dx(input_.shape());
  CMapRow w(weight_.value.data(), out_channels_, in_channels_);
  MapRow dw(weight_.grad.data(), out_channels_, in_channels_);
  for (std::size_t n = 0; n < batch; ++n) {
    CMapRow xin(input_.data() + n * in_channels_ * inner, in_channels_, inner);
    CMapRow g(dy.data() + n * out_channels_ * inner, out_channels_, inner);
    dw.noalias() += g * xin.transpose();
    for (std::size_t o = 0; o < out_channels_; ++o) bias_.grad[o] += g.row(o).sum();
    MapRow dxin(dx.data() + n * in_channels_ * inner, in_channels_, inner);
    dxin.noalias() = w.transpose() * g;
  }
  return dx;
}

// ---------------------------------------------------------------------------

Lstm::Lstm(std::string name, std::size_t input_size, std::size_t hidden_size)
    : input_size_(input_size),
      hidden_size_(hidden_size),
      w_ih_(MakeParam(name + ".w_ih", {4 * hidden_size, input_size})),
      w_hh_(MakeParam(name + ".w_hh", {4 * hidden_size, hidden_size})),
      bias_(MakeParam(name + ".bias", {4 * hidden_size})) {}

void Lstm::CollectParameters(std::vector<Parameter *> *out) {
  out->push_back(&w_ih_);
  out->push_back(&w_hh_);
  out->push_back(&bias_);
}

Tensor Lstm::Forward(const Tensor &x, Mode) {
  ExpectRank(x, 4, "lstm");
  if (x.dim(1) != 1 || x.dim(3) != input_size_)
    throw ShapeError(w_ih_.name + ": expected b x 1 x t x " + std::to_string(input_size_) +
                     ", got " + ShapeString(x.shape()));
  input_ = x;
  batch_ = x.dim(0);
  frames_ = x.dim(2);
  const std::size_t h = hidden_size_, b = batch_;
  gates_.assign(frames_ * 4 * h * b, 0.0);
  cells_.assign(frames_ * h * b, 0.0);
  hidden_.assign(frames_ * h * b, 0.0);
  CMapRow w_ih(w_ih_.value.data(), 4 * h, input_size_);
  CMapRow w_hh(w_hh_.value.data(), 4 * h, h);
  Eigen::Map<const Eigen::VectorXd> bias(bias_.value.data(), 4 * h);
  ColMat pre(4 * h, b);
  Tensor y({b, 1, frames_, h});
  for (std::size_t t = 0; t < frames_; ++t) {
    Eigen::Map<const ColMat, 0, Stride> xt(x.data() + t * input_size_, input_size_, b,
                                           Stride(frames_ * input_size_));
    pre.noalias() = w_ih * xt;
    pre.colwise() += bias;
    if (t > 0) {
      Eigen::Map<const ColMat> hp(hidden_.data() + (t - 1) * h * b, h, b);
      pre.noalias() += w_hh * hp;
    }
    Eigen::Map<ColMat> gate(gates_.data() + t * 4 * h * b, 4 * h, b);
    Eigen::Map<ColMat> cell(cells_.data() + t * h * b, h, b);
    Eigen::Map<ColMat> hid(hidden_.data() + t * h * b, h, b);
    for (std::size_t n = 0; n < b; ++n)
      for (std::size_t k = 0; k < h; ++k) {
        const double i = Sigmoid(pre(k, n));
        const double f = Sigmoid(pre(h + k, n));
        const double g = std::tanh(pre(2 * h + k, n));
        const double o = Sigmoid(pre(3 * h + k, n));
        gate(k, n) = i;
        gate(h + k, n) = f;
        gate(2 * h + k, n) = g;
        gate(3 * h + k, n) = o;
        const double c_prev = t > 0 ? cells_[(t - 1) * h * b + n * h + k] : 0.0;
        const double c = f * c_prev + i * g;
        cell(k, n) = c;
        hid(k, n) = o * std::tanh(c);
        y[(n * frames_ + t) * h + k] = hid(k, n);
      }
  }
  return y;
}

Tensor Lstm::Backward(const Tensor &dy) {
  const std::size_t h = hidden_size_, b = batch_, d = input_size_;
  CMapRow w_ih(w_ih_.value.data(), 4 * h, d);
  CMapRow w_hh(w_hh_.value.data(), 4 * h, h);
  MapRow dw_ih(w_ih_.grad.data(), 4 * h, d);
  MapRow dw_hh(w_hh_.grad.data(), 4 * h, h);
  Tensor dx(input_.shape());
  ColMat dh_next = ColMat::Zero(h, b), dc_next = ColMat::Zero(h, b);
  ColMat dgate(4 * h, b), dxt(d, b);
  for (std::size_t t = frames_; t-- > 0;) {
    Eigen::Map<const ColMat> gate(gates_.data() + t * 4 * h * b, 4 * h, b);
    for (std::size_t n = 0; n < b; ++n)
      for (std::size_t k = 0; k < h; ++k) {
        const double i = gate(k, n), f = gate(h + k, n), g = gate(2 * h + k, n),
                     o = gate(3 * h + k, n);
        const double c = cells_[t * h * b + n * h + k];
        const double c_prev = t > 0 ? cells_[(t - 1) * h * b + n * h + k] : 0.0;
        const double tc = std::tanh(c);
        const double dh = dy[(n * frames_ + t) * h + k] + dh_next(k, n);
        const double dout = dh * tc;
        const double dc = dh * o * (1 - tc * tc) + dc_next(k, n);
        dgate(k, n) = dc * g * i * (1 - i);
        dgate(h + k, n) = dc * c_prev * f * (1 - f);
        dgate(2 * h + k, n) = dc * i * (1 - g * g);
        dgate(3 * h + k, n) = dout * o * (1 - o);
        dc_next(k, n) = dc * f;
      }
    Eigen::Map<const ColMat, 0, Stride> xt(input_.data() + t * d, d, b, Stride(frames_ * d));
    dw_ih.noalias() += dgate * xt.transpose();
    for (std::size_t r = 0; r < 4 * h; ++r) bias_.grad[r] += dgate.row(r).sum();
    if (t > 0) {
      Eigen::Map<const ColMat> hp(hidden_.data() + (t - 1) * h * b, h, b);
      dw_hh.noalias() += dgate * hp.transpose();
    }
    dh_next.noalias() = w_hh.transpose() * dgate;
    dxt.noalias() = w_ih.transpose() * dgate;
    for (std::size_t n = 0; n < b; ++n)
      for (std::size_t k = 0; k < d; ++k) dx[(n * frames_ + t) * d + k] = dxt(k, n);
  }
  return dx;
}

// ---------------------------------------------------------------------------

Tensor ScaledTanh::Forward(const Tensor &x, Mode) {
  output_ = x;
  for (double &v : output_.values()) v = bound_ * std::tanh(v);
  return output_;
}

Tensor ScaledTanh::Backward(const Tensor &dy) {
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.size(); ++i) {
    const double th = output_[i] / bound_;
    dx[i] *= bound_ * (1 - th * th);
  }
  return dx;
}

Tensor MeanOverFreq(const Tensor &x) {
  ExpectRank(x, 4, "mean_over_freq");
  const std::size_t f = x.dim(3);
  Tensor y({x.dim(0), x.dim(1), x.dim(2), 1});
  for (std::size_t r = 0; r < y.size(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < f; ++k) s += x[r * f + k];
    y[r] = s / static_cast<double>(f);
  }
  return y;
}

Tensor MeanOverFreqBackward(const Tensor &dy, std::size_t freq) {
  Tensor dx({dy.dim(0), dy.dim(1), dy.dim(2), freq});
  for (std::size_t r = 0; r < dy.size(); ++r)
    for (std::size_t k = 0; k < freq; ++k) dx[r * freq + k] = dy[r] / static_cast<double>(freq);
  return dx;
}

Tensor BroadcastFreq(const Tensor &x, std::size_t freq) {
  ExpectRank(x, 4, "broadcast_freq");
  if (x.dim(3) != 1) throw ShapeError("broadcast_freq: input must have one bin");
  Tensor y({x.dim(0), x.dim(1), x.dim(2), freq});
  for (std::size_t r = 0; r < x.size(); ++r)
    std::fill_n(y.data() + r * freq, freq, x[r]);
  return y;
}

Tensor BroadcastFreqBackward(const Tensor &dy) {
  const std::size_t f = dy.dim(3);
  Tensor dx({dy.dim(0), dy.dim(1), dy.dim(2), 1});
  for (std::size_t r = 0; r < dx.size(); ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < f; ++k) s += dy[r * f + k];
    dx[r] = s;
  }
  return dx;
}

Tensor FramesToSequence(const Tensor &x) {
  ExpectRank(x, 4, "frames_to_sequence");
  const std::size_t b = x.dim(0), c = x.dim(1), t = x.dim(2), f = x.dim(3);
  Tensor y({b, 1, t, c * f});
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t k = 0; k < t; ++k)
        std::copy_n(x.data() + ((n * c + ch) * t + k) * f, f,
                    y.data() + (n * t + k) * c * f + ch * f);
  return y;
}

Tensor SequenceToFrames(const Tensor &seq, std::size_t channels, std::size_t freq) {
  ExpectRank(seq, 4, "sequence_to_frames");
  const std::size_t b = seq.dim(0), t = seq.dim(2);
  if (seq.dim(3) != channels * freq) throw ShapeError("sequence_to_frames: width mismatch");
  Tensor y({b, channels, t, freq});
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < channels; ++ch)
      for (std::size_t k = 0; k < t; ++k)
        std::copy_n(seq.data() + (n * t + k) * channels * freq + ch * freq, freq,
                    y.data() + ((n * channels + ch) * t + k) * freq);
  return y;
}

}  // namespace avse
