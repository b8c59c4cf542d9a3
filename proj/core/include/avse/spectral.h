// core/include/avse/spectral.h

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

#ifndef AVSE_SPECTRAL_H_
#define AVSE_SPECTRAL_H_

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace avse {

/// STFT framing. Frames start at sample 0 with no centre padding, so a
/// signal of `n` samples yields 1 + (n - win_length) / hop_length frames.
struct SpectralConfig {
  int sample_rate = 16000;
  int win_length = 512;
  int hop_length = 196;
  int fft_size = 512;

  void Validate() const;
  std::size_t NumBins() const { return static_cast<std::size_t>(fft_size) / 2 + 1; }
  /// Frame count for `num_samples`; 0 if shorter than one window.
  std::size_t NumFrames(std::size_t num_samples) const;
  /// Length of the signal istft produces from `num_frames` frames.
  std::size_t NumSamples(std::size_t num_frames) const;
};

/// Periodic Hann window of the given length.
std::vector<double> HannWindow(std::size_t length);

/// One-sided complex spectrogram. Logical shape is F x T; storage is
/// frame-major (index t * F + f) so frame crops are contiguous.
struct ComplexSpectrogram {
  std::size_t num_bins = 0;
  std::size_t num_frames = 0;
  std::vector<double> real;
  std::vector<double> imag;
  SpectralConfig config;

  ComplexSpectrogram() = default;
  ComplexSpectrogram(std::size_t bins, std::size_t frames,
                     const SpectralConfig &cfg);

  std::size_t Index(std::size_t f, std::size_t t) const { return t * num_bins + f; }
  double &Re(std::size_t f, std::size_t t) { return real[Index(f, t)]; }
  double &Im(std::size_t f, std::size_t t) { return imag[Index(f, t)]; }
  double Re(std::size_t f, std::size_t t) const { return real[Index(f, t)]; }
  double Im(std::size_t f, std::size_t t) const { return imag[Index(f, t)]; }

  /// Throws ShapeError if any invariant is broken.
  void Validate() const;
  /// Frames [start, start + count).
  ComplexSpectrogram CropFrames(std::size_t start, std::size_t count) const;
};

/// Bounded complex ratio mask, same layout as ComplexSpectrogram.
struct ComplexMask {
  std::size_t num_bins = 0;
  std::size_t num_frames = 0;
  std::vector<double> real;
  std::vector<double> imag;
  double bound = 1.0;

  ComplexMask() = default;
  ComplexMask(std::size_t bins, std::size_t frames, double bound_k = 1.0);

  std::size_t Index(std::size_t f, std::size_t t) const { return t * num_bins + f; }
  void Validate() const;
};

ComplexSpectrogram Stft(std::span<const double> waveform,
                        const SpectralConfig &config = {});

/// Least-squares overlap-add: each inverse frame is re-windowed and the sum
/// divided by the accumulated squared window; samples where that envelope
/// is below 1e-8 come out as 0.
std::vector<double> Istft(const ComplexSpectrogram &spec);

inline constexpr double kDefaultMaskEpsilon = 1e-8;

/// M = S conj(Y) / (|Y|^2 + epsilon), each component clipped to [-bound,
/// bound]. Pass an infinite bound for the unclipped mask.
ComplexMask IdealComplexMask(const ComplexSpectrogram &clean,
                             const ComplexSpectrogram &noisy,
                             double epsilon = kDefaultMaskEpsilon,
                             double bound = 1.0);

/// Complex multiplication of mask and noisy spectrogram, bin by bin.
ComplexSpectrogram ApplyMask(const ComplexSpectrogram &noisy,
                             const ComplexMask &mask);

}  // namespace avse

#endif  // AVSE_SPECTRAL_H_
