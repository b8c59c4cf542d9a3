// core/src/spectral.cc

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

#include "avse/spectral.h"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "avse/error.h"
#include "avse/fft.h"

namespace avse {

void SpectralConfig::Validate() const {
  if (sample_rate <= 0) throw InvalidArgument("sample_rate must be > 0");
  if (hop_length <= 0 || hop_length > win_length || win_length > fft_size)
    throw InvalidArgument(
        "need 0 < hop_length <= win_length <= fft_size, got hop=" +
        std::to_string(hop_length) + " win=" + std::to_string(win_length) +
        " fft=" + std::to_string(fft_size));
}

std::size_t SpectralConfig::NumFrames(std::size_t num_samples) const {
  const auto win = static_cast<std::size_t>(win_length);
  if (num_samples < win) return 0;
  return 1 + (num_samples - win) / static_cast<std::size_t>(hop_length);
}

std::size_t SpectralConfig::NumSamples(std::size_t num_frames) const {
  if (num_frames == 0) return 0;
  return (num_frames - 1) * static_cast<std::size_t>(hop_length) +
         static_cast<std::size_t>(win_length);
}

std::vector<double> HannWindow(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n)
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) /
                                static_cast<double>(length));
  return w;
}

ComplexSpectrogram::ComplexSpectrogram(std::size_t bins, std::size_t frames,
                                       const SpectralConfig &cfg)
    : num_bins(bins),
      num_frames(frames),
      real(bins * frames, 0.0),
      imag(bins * frames, 0.0),
      config(cfg) {}

void ComplexSpectrogram::Validate() const {
  config.Validate();
  if (num_bins != config.NumBins())
    throw ShapeError("spectrogram has " + std::to_string(num_bins) +
                     " bins, fft_size implies " +
                     std::to_string(config.NumBins()));
  if (real.size() != num_bins * num_frames || imag.size() != real.size())
    throw ShapeError("spectrogram real/imag grids do not match F x T");
}

ComplexSpectrogram ComplexSpectrogram::CropFrames(std::size_t start,
                                                  std::size_t count) const {
  if (start + count > num_frames)
    throw InvalidArgument("crop [" + std::to_string(start) + ", " +
                          std::to_string(start + count) + ") exceeds " +
                          std::to_string(num_frames) + " frames");
  ComplexSpectrogram out(num_bins, count, config);
  std::copy_n(real.begin() + start * num_bins, count * num_bins,
              out.real.begin());
  std::copy_n(imag.begin() + start * num_bins, count * num_bins,
              out.imag.begin());
  return out;
}

ComplexMask::ComplexMask(std::size_t bins, std::size_t frames, double bound_k)
    : num_bins(bins),
      num_frames(frames),
      real(bins * frames, 0.0),
      imag(bins * frames, 0.0),
      bound(bound_k) {}

void ComplexMask::Validate() const {
  if (!(bound > 0)) throw InvalidArgument("mask bound must be positive");
  if (real.size() != num_bins * num_frames || imag.size() != real.size())
    throw ShapeError("mask real/imag grids do not match F x T");
  for (std::size_t i = 0; i < real.size(); ++i)
    if (std::abs(real[i]) > bound || std::abs(imag[i]) > bound)
      throw InvalidArgument("mask component outside [-K, K]");
}

ComplexSpectrogram Stft(std::span<const double> waveform,
                        const SpectralConfig &config) {
  config.Validate();
  const auto win = static_cast<std::size_t>(config.win_length);
  const auto hop = static_cast<std::size_t>(config.hop_length);
  const auto nfft = static_cast<std::size_t>(config.fft_size);
  if (waveform.size() < win)
    throw InvalidArgument("stft: waveform has " +
                          std::to_string(waveform.size()) +
                          " samples, shorter than one window of " +
                          std::to_string(win));
  for (double x : waveform)
    if (!std::isfinite(x)) throw InvalidArgument("stft: non-finite sample");

  const std::size_t frames = config.NumFrames(waveform.size());
  const std::size_t bins = config.NumBins();
  ComplexSpectrogram spec(bins, frames, config);
  const std::vector<double> window = HannWindow(win);
  std::vector<double> frame(nfft, 0.0);
  std::vector<std::complex<double>> out(bins);
  for (std::size_t t = 0; t < frames; ++t) {
    const double *src = waveform.data() + t * hop;
    for (std::size_t n = 0; n < win; ++n) frame[n] = src[n] * window[n];
    RealDft(frame, out);
    for (std::size_t f = 0; f < bins; ++f) {
      spec.real[t * bins + f] = out[f].real();
      spec.imag[t * bins + f] = out[f].imag();
    }
  }
  return spec;
}

std::vector<double> Istft(const ComplexSpectrogram &spec) {
  spec.Validate();
  const SpectralConfig &config = spec.config;
  const auto win = static_cast<std::size_t>(config.win_length);
  const auto hop = static_cast<std::size_t>(config.hop_length);
  const auto nfft = static_cast<std::size_t>(config.fft_size);
  const std::size_t bins = spec.num_bins;
  const std::size_t length = config.NumSamples(spec.num_frames);

  std::vector<double> output(length, 0.0), envelope(length, 0.0);
  const std::vector<double> window = HannWindow(win);
  std::vector<std::complex<double>> in(bins);
  std::vector<double> frame(nfft);
  for (std::size_t t = 0; t < spec.num_frames; ++t) {
    for (std::size_t f = 0; f < bins; ++f)
      in[f] = {spec.real[t * bins + f], spec.imag[t * bins + f]};
    InverseRealDft(in, frame);
    for (std::size_t n = 0; n < win; ++n) {
      output[t * hop + n] += frame[n] * window[n];
      envelope[t * hop + n] += window[n] * window[n];
    }
  }
  for (std::size_t n = 0; n < length; ++n)
    output[n] = envelope[n] < 1e-8 ? 0.0 : output[n] / envelope[n];
  return output;
}

namespace {

void CheckSameGrid(const ComplexSpectrogram &a, const ComplexSpectrogram &b,
                   const char *op) {
  if (a.num_bins != b.num_bins || a.num_frames != b.num_frames ||
      a.real.size() != b.real.size())
    throw ShapeError(std::string(op) + ": dimension mismatch " +
                     std::to_string(a.num_bins) + "x" +
                     std::to_string(a.num_frames) + " vs " +
                     std::to_string(b.num_bins) + "x" +
                     std::to_string(b.num_frames));
}

}  // namespace

ComplexMask IdealComplexMask(const ComplexSpectrogram &clean,
                             const ComplexSpectrogram &noisy, double epsilon,
                             double bound) {
  CheckSameGrid(clean, noisy, "ideal_complex_mask");
  if (!(epsilon > 0)) throw InvalidArgument("epsilon must be positive");
  if (!(bound > 0)) throw InvalidArgument("bound must be positive");
  ComplexMask mask(clean.num_bins, clean.num_frames, bound);
  for (std::size_t i = 0; i < clean.real.size(); ++i) {
    const double sr = clean.real[i], si = clean.imag[i];
    const double yr = noisy.real[i], yi = noisy.imag[i];
    const double denom = yr * yr + yi * yi + epsilon;
    // S * conj(Y)
    const double mr = (sr * yr + si * yi) / denom;
    const double mi = (si * yr - sr * yi) / denom;
    mask.real[i] = std::clamp(mr, -bound, bound);
    mask.imag[i] = std::clamp(mi, -bound, bound);
  }
  return mask;
}

ComplexSpectrogram ApplyMask(const ComplexSpectrogram &noisy,
                             const ComplexMask &mask) {
  if (noisy.num_bins != mask.num_bins || noisy.num_frames != mask.num_frames ||
      noisy.real.size() != mask.real.size())
    throw ShapeError("apply_mask: dimension mismatch");
  ComplexSpectrogram out(noisy.num_bins, noisy.num_frames, noisy.config);
  for (std::size_t i = 0; i < noisy.real.size(); ++i) {
    const double yr = noisy.real[i], yi = noisy.imag[i];
    const double mr = mask.real[i], mi = mask.imag[i];
    out.real[i] = mr * yr - mi * yi;
    out.imag[i] = mr * yi + mi * yr;
  }
  return out;
}

}  // namespace avse
