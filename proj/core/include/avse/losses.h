// core/include/avse/losses.h

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

#ifndef AVSE_LOSSES_H_
#define AVSE_LOSSES_H_

#include <cstddef>
#include <string>
#include <vector>

#include "avse/model.h"
#include "avse/spectral.h"
#include "avse/tensor.h"

namespace avse {

struct LossWeights {
  double alpha = 1.0;
  double gamma1 = 1.0;
  double gamma2 = 1.0;
  bool auto_balance = false;
  // Divides the feature MSE by the batch size.
  bool kd_per_item = true;

  void Validate() const;
};

/// Small dense row-major matrix used for frame features and Gram matrices.
struct Matrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> values;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}
  double &operator()(std::size_t i, std::size_t j) { return values[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

/// Mean squared error over all 2 F T components. If `grad` is non-null it
/// receives d loss / d pred.
double LossMask(const ComplexMask &pred, const ComplexMask &target,
                ComplexMask *grad = nullptr);
double LossStft(const ComplexSpectrogram &pred, const ComplexSpectrogram &clean,
                ComplexSpectrogram *grad = nullptr);
/// Maps a gradient w.r.t. ApplyMask(noisy, mask) onto the mask.
ComplexMask EnhancedGradToMask(const ComplexSpectrogram &grad_enhanced,
                               const ComplexSpectrogram &noisy);

double LossTeacher(double l_mask, double l_stft, const LossWeights &weights);

/// Checks names and shapes agree; throws ShapeError naming the layer.
void CheckTracesAligned(const FeatureTrace &teacher, const FeatureTrace &student);

/// Sum over layers of the summed squared difference, divided by the batch
/// size when `per_item`. `grad_student` gets d loss / d student features.
double LossKdMse(const FeatureTrace &teacher, const FeatureTrace &student,
                 std::vector<Tensor> *grad_student = nullptr, bool per_item = true);

/// Row n is item n's c x f slice at frame j, channel-major.
Matrix FrameFeatures(const Tensor &layer, std::size_t j);
/// A A^T with each row scaled to unit L2 norm; all-zero rows stay zero.
Matrix SimilarityMatrix(const Matrix &a);

/// (1 / b^2) sum over layers and frames of ||G_T - G_S||_F^2 on the
/// normalized Gram matrices.
double LossSpkd(const FeatureTrace &teacher, const FeatureTrace &student,
                std::vector<Tensor> *grad_student = nullptr);

struct LossTerms {
  double mask = 0, stft = 0, kd_mse = 0, spkd = 0;
};

/// Running means of every loss term, used to rescale the non-mask terms
/// towards the magnitude of L_mask.
class LossBalancer {
 public:
  void Observe(const LossTerms &terms);
  /// mean(term) / mean(mask); 1 when either mean is zero or nothing was
  /// observed yet. `which` is 1 (stft), 2 (kd) or 3 (spkd).
  double Ratio(int which) const;
  std::size_t count() const { return count_; }

 private:
  LossTerms sum_;
  std::size_t count_ = 0;
};

/// Multipliers actually applied to the stft, kd and spkd terms.
struct EffectiveWeights {
  double alpha, gamma1, gamma2;
};
EffectiveWeights ResolveWeights(const LossWeights &weights,
                                const LossBalancer *balancer);

double LossStudent(const LossTerms &terms, const LossWeights &weights,
                   const LossBalancer *balancer = nullptr);

}  // namespace avse

#endif  // AVSE_LOSSES_H_
