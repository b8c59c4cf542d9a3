// core/include/avse/tensor.h

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

#ifndef AVSE_TENSOR_H_
#define AVSE_TENSOR_H_

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace avse {

using Shape = std::vector<std::size_t>;

std::size_t NumElements(const Shape &shape);
std::string ShapeString(const Shape &shape);

/// Dense row-major array of doubles. Feature maps use the layout
/// b x c x t x f (frequency fastest); video features b x c x t x h x w.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);

  const Shape &shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_.at(i); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double *data() { return data_.data(); }
  const double *data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double> &values() { return data_; }
  const std::vector<double> &values() const { return data_; }

  double &operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Keeps the element count, changes the interpretation.
  void Reshape(Shape shape);
  /// Resizes to `shape` and sets every element to zero.
  void Resize(Shape shape);
  void SetZero();

  bool SameShape(const Tensor &other) const { return shape_ == other.shape_; }

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Concatenates b x c_i x rest tensors along axis 1.
Tensor ConcatChannels(const Tensor &a, const Tensor &b);
/// Splits the gradient of ConcatChannels back into its two parts.
void SplitChannels(const Tensor &joined, std::size_t channels_a, Tensor *a,
                   Tensor *b);

}  // namespace avse

#endif  // AVSE_TENSOR_H_
