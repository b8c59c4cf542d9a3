// core/src/tensor.cc

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

#include "avse/tensor.h"

#include <algorithm>
#include <sstream>

#include "avse/error.h"

namespace avse {

std::size_t NumElements(const Shape &shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string ShapeString(const Shape &shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(NumElements(shape_), fill) {}

void Tensor::Reshape(Shape shape) {
  if (NumElements(shape) != data_.size())
    throw ShapeError("cannot reshape " + ShapeString(shape_) + " to " +
                     ShapeString(shape));
  shape_ = std::move(shape);
}

void Tensor::Resize(Shape shape) {
  shape_ = std::move(shape);
  data_.assign(NumElements(shape_), 0.0);
}

void Tensor::SetZero() { std::fill(data_.begin(), data_.end(), 0.0); }

Tensor ConcatChannels(const Tensor &a, const Tensor &b) {
  if (a.rank() < 2 || a.rank() != b.rank() || a.dim(0) != b.dim(0))
    throw ShapeError("concat: " + ShapeString(a.shape()) + " vs " +
                     ShapeString(b.shape()));
  for (std::size_t i = 2; i < a.rank(); ++i)
    if (a.dim(i) != b.dim(i))
      throw ShapeError("concat: " + ShapeString(a.shape()) + " vs " +
                       ShapeString(b.shape()));
  Shape shape = a.shape();
  shape[1] = a.dim(1) + b.dim(1);
  Tensor out(shape);
  const std::size_t inner = NumElements(a.shape()) / (a.dim(0) * a.dim(1));
  const std::size_t na = a.dim(1) * inner, nb = b.dim(1) * inner;
  for (std::size_t n = 0; n < a.dim(0); ++n) {
    double *dst = out.data() + n * (na + nb);
    std::copy_n(a.data() + n * na, na, dst);
    std::copy_n(b.data() + n * nb, nb, dst + na);
  }
  return out;
}

void SplitChannels(const Tensor &joined, std::size_t channels_a, Tensor *a,
                   Tensor *b) {
  const std::size_t batch = joined.dim(0), channels = joined.dim(1);
  if (channels_a > channels) throw ShapeError("split: too many channels");
  const std::size_t inner = joined.size() / (batch * channels);
  Shape sa = joined.shape(), sb = joined.shape();
  sa[1] = channels_a;
  sb[1] = channels - channels_a;
  a->Resize(sa);
  b->Resize(sb);
  const std::size_t na = channels_a * inner, nb = sb[1] * inner;
  for (std::size_t n = 0; n < batch; ++n) {
    const double *src = joined.data() + n * (na + nb);
    std::copy_n(src, na, a->data() + n * na);
    std::copy_n(src + na, nb, b->data() + n * nb);
  }
}

}  // namespace avse
