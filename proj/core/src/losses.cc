// core/src/losses.cc

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

#include "avse/losses.h"

#include <Eigen/Dense>

#include <cmath>

#include "avse/error.h"

namespace avse {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void CheckSameGrid(std::size_t f1, std::size_t t1, std::size_t f2, std::size_t t2,
                   const char *what) {
  if (f1 != f2 || t1 != t2)
    throw ShapeError(std::string(what) + ": " + std::to_string(f1) + "x" + std::to_string(t1) +
                     " vs " + std::to_string(f2) + "x" + std::to_string(t2));
}

RowMat ToEigen(const Matrix &m) {
  return Eigen::Map<const RowMat>(m.values.data(), m.rows, m.cols);
}

Matrix FromEigen(const RowMat &m) {
  Matrix out(m.rows(), m.cols());
  Eigen::Map<RowMat>(out.values.data(), m.rows(), m.cols()) = m;
  return out;
}

// Row-normalized Gram matrix plus the row norms needed for its gradient.
RowMat NormalizedGram(const RowMat &a, Eigen::VectorXd *norms) {
  RowMat g = a * a.transpose();
  norms->resize(g.rows());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double r = g.row(i).norm();
    (*norms)(i) = r;
    if (r > 0) g.row(i) /= r;
  }
  return g;
}

void AddFrameGrad(const RowMat &grad, std::size_t j, Tensor *out) {
  const std::size_t b = out->dim(0), c = out->dim(1), t = out->dim(2), f = out->dim(3);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t k = 0; k < f; ++k)
        (*out)[((n * c + ch) * t + j) * f + k] += grad(n, ch * f + k);
}

RowMat FrameMatrix(const Tensor &layer, std::size_t j) {
  const Matrix m = FrameFeatures(layer, j);
  return ToEigen(m);
}

}  // namespace

void LossWeights::Validate() const {
  for (double w : {alpha, gamma1, gamma2})
    if (!std::isfinite(w) || w < 0) throw ConfigError("loss weights must be finite and >= 0");
}

double LossMask(const ComplexMask &pred, const ComplexMask &target, ComplexMask *grad) {
  CheckSameGrid(pred.num_bins, pred.num_frames, target.num_bins, target.num_frames, "loss_mask");
  const std::size_t n = pred.real.size();
  const double scale = 1.0 / static_cast<double>(2 * n);
  if (grad) *grad = ComplexMask(pred.num_bins, pred.num_frames, pred.bound);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = pred.real[i] - target.real[i];
    const double di = pred.imag[i] - target.imag[i];
    sum += dr * dr + di * di;
    if (grad) {
      grad->real[i] = 2 * dr * scale;
      grad->imag[i] = 2 * di * scale;
    }
  }
  return sum * scale;
}

double LossStft(const ComplexSpectrogram &pred, const ComplexSpectrogram &clean,
                ComplexSpectrogram *grad) {
  CheckSameGrid(pred.num_bins, pred.num_frames, clean.num_bins, clean.num_frames, "loss_stft");
  const std::size_t n = pred.real.size();
  const double scale = 1.0 / static_cast<double>(2 * n);
  if (grad) *grad = ComplexSpectrogram(pred.num_bins, pred.num_frames, pred.config);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dr = pred.real[i] - clean.real[i];
    const double di = pred.imag[i] - clean.imag[i];
    sum += dr * dr + di * di;
    if (grad) {
      grad->real[i] = 2 * dr * scale;
      grad->imag[i] = 2 * di * scale;
    }
  }
  return sum * scale;
}

ComplexMask EnhancedGradToMask(const ComplexSpectrogram &grad_enhanced,
                               const ComplexSpectrogram &noisy) {
  CheckSameGrid(grad_enhanced.num_bins, grad_enhanced.num_frames, noisy.num_bins,
                noisy.num_frames, "enhanced gradient");
  ComplexMask g(noisy.num_bins, noisy.num_frames);
  // E = M Y: dE_r/dM_r = Y_r, dE_i/dM_r = Y_i, dE_r/dM_i = -Y_i, dE_i/dM_i = Y_r.
  for (std::size_t i = 0; i < noisy.real.size(); ++i) {
    const double yr = noisy.real[i], yi = noisy.imag[i];
    const double er = grad_enhanced.real[i], ei = grad_enhanced.imag[i];
    g.real[i] = er * yr + ei * yi;
    g.imag[i] = ei * yr - er * yi;
  }
  return g;
}

double LossTeacher(double l_mask, double l_stft, const LossWeights &weights) {
  return l_mask + weights.alpha * l_stft;
}

void CheckTracesAligned(const FeatureTrace &teacher, const FeatureTrace &student) {
  if (teacher.size() != student.size())
    throw ShapeError("trace lengths differ: " + std::to_string(teacher.size()) + " vs " +
                     std::to_string(student.size()));
  for (std::size_t l = 0; l < teacher.size(); ++l) {
    if (teacher.names[l] != student.names[l])
      throw ShapeError("trace entry " + std::to_string(l) + " is '" + teacher.names[l] +
                       "' for the teacher but '" + student.names[l] + "' for the student");
    const Tensor &a = teacher.features[l], &b = student.features[l];
    if (!a.SameShape(b) || a.rank() != 4)
      throw ShapeError("trace layer '" + teacher.names[l] + "' shapes differ: " +
                       ShapeString(a.shape()) + " vs " + ShapeString(b.shape()));
  }
}

double LossKdMse(const FeatureTrace &teacher, const FeatureTrace &student,
                 std::vector<Tensor> *grad_student, bool per_item) {
  CheckTracesAligned(teacher, student);
  if (grad_student) grad_student->assign(student.size(), Tensor());
  double total = 0.0;
  for (std::size_t l = 0; l < teacher.size(); ++l) {
    const Tensor &ft = teacher.features[l], &fs = student.features[l];
    const double scale = per_item ? 1.0 / static_cast<double>(ft.dim(0)) : 1.0;
    double sum = 0.0;
    Tensor *g = nullptr;
    if (grad_student) {
      (*grad_student)[l] = Tensor(fs.shape());
      g = &(*grad_student)[l];
    }
    for (std::size_t i = 0; i < ft.size(); ++i) {
      const double d = fs[i] - ft[i];
      sum += d * d;
      if (g) (*g)[i] = 2 * d * scale;
    }
    total += sum * scale;
  }
  return total;
}

Matrix FrameFeatures(const Tensor &layer, std::size_t j) {
  if (layer.rank() != 4) throw ShapeError("frame features need a b x c x t x f tensor");
  const std::size_t b = layer.dim(0), c = layer.dim(1), t = layer.dim(2), f = layer.dim(3);
  if (j >= t)
    throw InvalidArgument("frame " + std::to_string(j) + " out of range for " +
                          std::to_string(t) + " frames");
  Matrix m(b, c * f);
  for (std::size_t n = 0; n < b; ++n)
    for (std::size_t ch = 0; ch < c; ++ch)
      for (std::size_t k = 0; k < f; ++k) m(n, ch * f + k) = layer[((n * c + ch) * t + j) * f + k];
  return m;
}

Matrix SimilarityMatrix(const Matrix &a) {
  Eigen::VectorXd norms;
  return FromEigen(NormalizedGram(ToEigen(a), &norms));
}

double LossSpkd(const FeatureTrace &teacher, const FeatureTrace &student,
                std::vector<Tensor> *grad_student) {
  CheckTracesAligned(teacher, student);
  if (grad_student) grad_student->assign(student.size(), Tensor());
  double total = 0.0;
  for (std::size_t l = 0; l < teacher.size(); ++l) {
    const Tensor &ft = teacher.features[l], &fs = student.features[l];
    const std::size_t b = ft.dim(0), frames = ft.dim(2);
    const double scale = 1.0 / static_cast<double>(b * b);
    if (grad_student) (*grad_student)[l] = Tensor(fs.shape());
    for (std::size_t j = 0; j < frames; ++j) {
      Eigen::VectorXd norms_t, norms_s;
      const RowMat a_s = FrameMatrix(fs, j);
      const RowMat gt = NormalizedGram(FrameMatrix(ft, j), &norms_t);
      const RowMat gs = NormalizedGram(a_s, &norms_s);
      const RowMat diff = gs - gt;
      total += scale * diff.squaredNorm();
      if (!grad_student) continue;
      // d/dG~_S, then through row normalization and A A^T.
      const RowMat d_norm = 2 * scale * diff;
      RowMat d_gram = RowMat::Zero(b, b);
      for (std::size_t i = 0; i < b; ++i) {
        if (norms_s(i) == 0) continue;
        const double proj = gs.row(i).dot(d_norm.row(i));
        d_gram.row(i) = (d_norm.row(i) - proj * gs.row(i)) / norms_s(i);
      }
      const RowMat d_a = (d_gram + d_gram.transpose()) * a_s;
      AddFrameGrad(d_a, j, &(*grad_student)[l]);
    }
  }
  return total;
}

void LossBalancer::Observe(const LossTerms &terms) {
  sum_.mask += terms.mask;
  sum_.stft += terms.stft;
  sum_.kd_mse += terms.kd_mse;
  sum_.spkd += terms.spkd;
  ++count_;
}

double LossBalancer::Ratio(int which) const {
  if (count_ == 0 || sum_.mask <= 0) return 1.0;
  double term = 0;
  switch (which) {
    case 1: term = sum_.stft; break;
    case 2: term = sum_.kd_mse; break;
    case 3: term = sum_.spkd; break;
    default: throw InvalidArgument("balancer term must be 1, 2 or 3");
  }
  return term > 0 ? term / sum_.mask : 1.0;
}

EffectiveWeights ResolveWeights(const LossWeights &w, const LossBalancer *balancer) {
  EffectiveWeights e{w.alpha, w.gamma1, w.gamma2};
  if (w.auto_balance && balancer) {
    e.alpha /= balancer->Ratio(1);
    e.gamma1 /= balancer->Ratio(2);
    e.gamma2 /= balancer->Ratio(3);
  }
  return e;
}

double LossStudent(const LossTerms &terms, const LossWeights &weights,
                   const LossBalancer *balancer) {
  const EffectiveWeights e = ResolveWeights(weights, balancer);
  return terms.mask + e.alpha * terms.stft + e.gamma1 * terms.kd_mse + e.gamma2 * terms.spkd;
}

}  // namespace avse
