// core/src/stoi.cc

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

#include <algorithm>
#include <cmath>
#include <complex>
#include <numeric>
#include <vector>

#include "avse/error.h"
#include "avse/fft.h"
#include "avse/metrics.h"

namespace avse {
namespace {

constexpr int kStoiRate = 10000;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kHop = 128;
constexpr std::size_t kFft = 512;
constexpr std::size_t kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = 2.220446049250313e-16;  // double machine epsilon

double Sinc(double x) {
  if (x == 0) return 1.0;
  const double px = M_PI * x;
  return std::sin(px) / px;
}

// Modified Bessel function of the first kind, order 0 (power series).
double BesselI0(double x) {
  double sum = 1.0, term = 1.0;
  const double q = x * x / 4;
  for (int k = 1; k < 200; ++k) {
    term *= q / (static_cast<double>(k) * k);
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return sum;
}

// Symmetric Hann of length n without the zero endpoints (MATLAB hanning).
std::vector<double> StoiWindow(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2 * M_PI * static_cast<double>(i + 1) / static_cast<double>(n + 1));
  return w;
}

// Band index ranges [lo, hi) of the FFT bins closest to each band's edges.
std::vector<std::pair<std::size_t, std::size_t>> ThirdOctaveBands() {
  const std::size_t bins = kFft / 2 + 1;
  auto nearest = [&](double freq) {
    std::size_t best = 0;
    double best_d = INFINITY;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(kStoiRate) * static_cast<double>(k) / kFft;
      const double d = (f - freq) * (f - freq);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  std::vector<std::pair<std::size_t, std::size_t>> bands;
  for (std::size_t b = 0; b < kBands; ++b) {
    const double k = static_cast<double>(b);
    bands.emplace_back(nearest(kMinFreq * std::pow(2.0, (2 * k - 1) / 6)),
                       nearest(kMinFreq * std::pow(2.0, (2 * k + 1) / 6)));
  }
  return bands;
}

// Frames starting at 0, hop, ... while start < n - frame_len (the last
// full frame is dropped, matching the reference implementation).
std::size_t CountFrames(std::size_t n) {
  if (n <= kFrame) return 0;
  return (n - kFrame - 1) / kHop + 1;
}

void RemoveSilentFrames(const std::vector<double> &x, const std::vector<double> &y,
                        std::vector<double> *x_out, std::vector<double> *y_out) {
  const std::vector<double> w = StoiWindow(kFrame);
  const std::size_t frames = CountFrames(x.size());
  std::vector<double> energy(frames);
  for (std::size_t i = 0; i < frames; ++i) {
    double sq = 0.0;
    for (std::size_t k = 0; k < kFrame; ++k) {
      const double v = w[k] * x[i * kHop + k];
      sq += v * v;
    }
    energy[i] = 20 * std::log10(std::sqrt(sq) + kEps);
  }
  const double max_e = frames ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < frames; ++i)
    if (max_e - kDynRange - energy[i] < 0) kept.push_back(i);
  const std::size_t out_len = kept.empty() ? 0 : (kept.size() - 1) * kHop + kFrame;
  x_out->assign(out_len, 0.0);
  y_out->assign(out_len, 0.0);
  for (std::size_t j = 0; j < kept.size(); ++j)
    for (std::size_t k = 0; k < kFrame; ++k) {
      (*x_out)[j * kHop + k] += w[k] * x[kept[j] * kHop + k];
      (*y_out)[j * kHop + k] += w[k] * y[kept[j] * kHop + k];
    }
}

// Band envelopes, band-major: out[band * frames + m].
std::vector<double> BandEnvelopes(const std::vector<double> &x, std::size_t *num_frames) {
  static const auto bands = ThirdOctaveBands();
  const std::vector<double> w = StoiWindow(kFrame);
  const std::size_t frames = CountFrames(x.size());
  *num_frames = frames;
  std::vector<double> out(kBands * frames);
  std::vector<double> buf(kFft);
  std::vector<std::complex<double>> spec(kFft / 2 + 1);
  std::vector<double> power(kFft / 2 + 1);
  for (std::size_t m = 0; m < frames; ++m) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t k = 0; k < kFrame; ++k) buf[k] = w[k] * x[m * kHop + k];
    RealDft(buf, spec);
    for (std::size_t k = 0; k < spec.size(); ++k) power[k] = std::norm(spec[k]);
    for (std::size_t b = 0; b < kBands; ++b) {
      double s = 0.0;
      for (std::size_t k = bands[b].first; k < bands[b].second; ++k) s += power[k];
      out[b * frames + m] = std::sqrt(s);
    }
  }
  return out;
}

}  // namespace

std::vector<double> ResamplePoly(std::span<const double> x, int up, int down) {
  if (up < 1 || down < 1) throw InvalidArgument("resampling factors must be positive");
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == 1 && down == 1) return std::vector<double>(x.begin(), x.end());

  const double rejection_db = 60.0;
  const double cutoff = 1.0 / (2.0 * std::max(up, down));
  const double roll_off = cutoff / 10;
  const auto half = static_cast<std::ptrdiff_t>(std::ceil((rejection_db - 8) / (28.714 * roll_off)));
  const double beta = 0.1102 * (rejection_db - 8.7);
  const std::size_t taps = static_cast<std::size_t>(2 * half + 1);
  std::vector<double> h(taps);
  const double i0_beta = BesselI0(beta);
  double sum = 0.0;
  for (std::size_t i = 0; i < taps; ++i) {
    const double t = static_cast<double>(static_cast<std::ptrdiff_t>(i) - half);
    const double r = 2.0 * static_cast<double>(i) / static_cast<double>(taps - 1) - 1.0;
    const double kaiser = BesselI0(beta * std::sqrt(std::max(0.0, 1 - r * r))) / i0_beta;
    h[i] = kaiser * 2 * up * cutoff * Sinc(2 * cutoff * t);
    sum += h[i];
  }
  for (double &v : h) v *= static_cast<double>(up) / sum;

  // Zero-phase filtering of the zero-stuffed input, sampled every `down`.
  const std::size_t n_in = x.size();
  const std::size_t n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(n_out, 0.0);
  const auto n_up = static_cast<std::ptrdiff_t>(n_in * up);
  for (std::size_t k = 0; k < n_out; ++k) {
    const auto center = static_cast<std::ptrdiff_t>(k * down);
    // Upsampled index u = center + half - j must be a multiple of `up`.
    std::ptrdiff_t u_max = std::min(center + half, n_up - 1);
    u_max -= ((u_max % up) + up) % up;
    double acc = 0.0;
    for (std::ptrdiff_t u = u_max; u >= 0 && u >= center - half; u -= up)
      acc += h[static_cast<std::size_t>(center + half - u)] * x[static_cast<std::size_t>(u / up)];
    y[k] = acc;
  }
  return y;
}

double Stoi(std::span<const double> ref, std::span<const double> est, int sample_rate) {
  if (ref.size() != est.size())
    throw InvalidArgument("stoi: signals differ in length (" + std::to_string(ref.size()) +
                          " vs " + std::to_string(est.size()) + ")");
  if (sample_rate <= 0) throw InvalidArgument("stoi: sample rate must be positive");
  const double min_seconds = static_cast<double>(kSegment * kHop) / kStoiRate;
  if (static_cast<double>(ref.size()) < min_seconds * sample_rate)
    throw InvalidArgument("stoi: input shorter than 384 ms");
  if (std::all_of(ref.begin(), ref.end(), [](double v) { return v == 0.0; }))
    throw InvalidArgument("stoi: reference is silent");

  std::vector<double> x, y;
  if (sample_rate != kStoiRate) {
    x = ResamplePoly(ref, kStoiRate, sample_rate);
    y = ResamplePoly(est, kStoiRate, sample_rate);
  } else {
    x.assign(ref.begin(), ref.end());
    y.assign(est.begin(), est.end());
  }
  std::vector<double> xs, ys;
  RemoveSilentFrames(x, y, &xs, &ys);
  std::size_t frames = 0, frames_y = 0;
  const std::vector<double> xe = BandEnvelopes(xs, &frames);
  const std::vector<double> ye = BandEnvelopes(ys, &frames_y);
  if (frames < kSegment)
    throw InvalidArgument("stoi: fewer than 30 non-silent frames (" + std::to_string(frames) + ")");

  const double clip = std::pow(10.0, -kBeta / 20);
  const std::size_t segments = frames - kSegment + 1;
  double total = 0.0;
  std::vector<double> xv(kSegment), yv(kSegment);
  for (std::size_t s = 0; s < segments; ++s)
    for (std::size_t b = 0; b < kBands; ++b) {
      const double *xr = &xe[b * frames + s];
      const double *yr = &ye[b * frames + s];
      double nx = 0, ny = 0;
      for (std::size_t i = 0; i < kSegment; ++i) {
        nx += xr[i] * xr[i];
        ny += yr[i] * yr[i];
      }
      const double scale = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0, my = 0;
      for (std::size_t i = 0; i < kSegment; ++i) {
        yv[i] = std::min(yr[i] * scale, xr[i] * (1 + clip));
        xv[i] = xr[i];
        mx += xv[i];
        my += yv[i];
      }
      mx /= kSegment;
      my /= kSegment;
      double sx = 0, sy = 0;
      for (std::size_t i = 0; i < kSegment; ++i) {
        xv[i] -= mx;
        yv[i] -= my;
        sx += xv[i] * xv[i];
        sy += yv[i] * yv[i];
      }
      sx = std::sqrt(sx) + kEps;
      sy = std::sqrt(sy) + kEps;
      double dot = 0;
      for (std::size_t i = 0; i < kSegment; ++i) dot += (xv[i] / sx) * (yv[i] / sy);
      total += dot;
    }
  return total / static_cast<double>(segments * kBands);
}

}  // namespace avse
