// tests/spectral_test.cc

// Copyright 2026  The AVSE-KD Authors

// See ../COPYING for clarification regarding multiple authors
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

#include <gtest/gtest.h>

#include <cmath>
#include <complex>

#include "avse/error.h"
#include "test_util.h"

namespace avse {
namespace {

using testing::DirectDft;
using testing::RandomVector;

double InteriorRelRms(const std::vector<double> &x, const std::vector<double> &y,
                      std::size_t margin) {
  double err = 0, ref = 0;
  for (std::size_t i = margin; i + margin < y.size(); ++i) {
    err += (x[i] - y[i]) * (x[i] - y[i]);
    ref += x[i] * x[i];
  }
  return std::sqrt(err / ref);
}

TEST(StftTest, ZeroSignalShape) {
  const std::vector<double> x(16000, 0.0);
  const ComplexSpectrogram s = Stft(x);
  EXPECT_EQ(s.num_bins, 257u);
  EXPECT_EQ(s.num_frames, 80u);
  for (double v : s.real) EXPECT_EQ(v, 0.0);
  for (double v : s.imag) EXPECT_EQ(v, 0.0);
}

TEST(StftTest, DefaultDimensionsAreTwoBy257ByT) {
  const SpectralConfig cfg;
  EXPECT_EQ(cfg.NumBins(), 257u);
  for (std::size_t n : {512u, 708u, 16000u, 31999u}) {
    const ComplexSpectrogram s = Stft(RandomVector(n, static_cast<std::uint32_t>(n)));
    EXPECT_EQ(s.real.size(), 257u * s.num_frames);
    EXPECT_EQ(s.imag.size(), 257u * s.num_frames);
    EXPECT_EQ(s.num_frames, 1 + (n - 512) / 196);
  }
}

TEST(StftTest, CosineAt500HzPeaksAtBin16) {
  std::vector<double> x(16000);
  for (std::size_t n = 0; n < x.size(); ++n) x[n] = std::cos(2 * M_PI * 500.0 * n / 16000.0);
  const ComplexSpectrogram s = Stft(x);
  for (std::size_t t = 0; t < s.num_frames; ++t) {
    std::size_t best = 0;
    double best_mag = -1;
    for (std::size_t f = 0; f < s.num_bins; ++f) {
      const double m = std::hypot(s.Re(f, t), s.Im(f, t));
      if (m > best_mag) best_mag = m, best = f;
    }
    EXPECT_EQ(best, 16u) << "frame " << t;
  }
  // One frame against a direct DFT of the windowed samples.
  const std::size_t t = 7;
  const auto w = HannWindow(512);
  std::vector<double> frame(512);
  for (std::size_t i = 0; i < 512; ++i) frame[i] = w[i] * x[t * 196 + i];
  const auto dft = DirectDft(frame);
  for (std::size_t f = 0; f < 257; ++f) {
    EXPECT_NEAR(s.Re(f, t), dft[f].real(), 1e-9);
    EXPECT_NEAR(s.Im(f, t), dft[f].imag(), 1e-9);
  }
}

TEST(StftTest, PeriodicHannWindow) {
  const auto w = HannWindow(8);
  EXPECT_DOUBLE_EQ(w[0], 0.0);
  EXPECT_NEAR(w[4], 1.0, 1e-15);
  EXPECT_NEAR(w[2], 0.5, 1e-15);
}

TEST(StftTest, RejectsShortOrNonFinite) {
  EXPECT_THROW(Stft(std::vector<double>(511, 0.0)), InvalidArgument);
  std::vector<double> x(1000, 0.0);
  x[10] = std::nan("");
  EXPECT_THROW(Stft(x), InvalidArgument);
  x[10] = INFINITY;
  EXPECT_THROW(Stft(x), InvalidArgument);
}

TEST(SpectralConfigTest, RejectsBadFraming) {
  SpectralConfig c;
  c.hop_length = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.win_length = 1024;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.hop_length = 600;
  EXPECT_THROW(c.Validate(), InvalidArgument);
  c = {};
  c.sample_rate = 0;
  EXPECT_THROW(c.Validate(), InvalidArgument);
}

TEST(IstftTest, ZeroSpectrogram) {
  const ComplexSpectrogram s(257, 80, SpectralConfig{});
  const auto y = Istft(s);
  EXPECT_EQ(y.size(), 15996u);
  for (double v : y) EXPECT_EQ(v, 0.0);
}

TEST(IstftTest, RoundTripInterior) {
  for (std::uint32_t seed = 0; seed < 5; ++seed) {
    const auto x = RandomVector(16000, seed);
    const auto y = Istft(Stft(x));
    ASSERT_EQ(y.size(), 15996u);
    EXPECT_LE(InteriorRelRms(x, y, 512), 1e-6);
  }
}

TEST(IstftTest, SingleFrameImpulse) {
  const SpectralConfig cfg;
  const std::size_t pos = 200;
  const auto w = HannWindow(512);
  std::vector<double> frame(512, 0.0);
  frame[pos] = w[pos];  // windowed unit impulse
  const auto dft = DirectDft(frame);
  ComplexSpectrogram s(257, 1, cfg);
  for (std::size_t f = 0; f < 257; ++f) {
    s.Re(f, 0) = dft[f].real();
    s.Im(f, 0) = dft[f].imag();
  }
  const auto y = Istft(s);
  ASSERT_EQ(y.size(), 512u);
  for (std::size_t i = 0; i < 512; ++i) {
    if (i == 0) {
      EXPECT_EQ(y[i], 0.0);  // window envelope is zero there
      continue;
    }
    EXPECT_NEAR(y[i], i == pos ? 1.0 : 0.0, 1e-9) << i;
  }
}

TEST(StftPropertiesTest, Linearity) {
  const auto x = RandomVector(4000, 1), y = RandomVector(4000, 2);
  const double a = 0.7, b = -1.3;
  std::vector<double> z(4000);
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = a * x[i] + b * y[i];
  const auto sx = Stft(x), sy = Stft(y), sz = Stft(z);
  for (std::size_t i = 0; i < sz.real.size(); ++i) {
    EXPECT_NEAR(sz.real[i], a * sx.real[i] + b * sy.real[i], 1e-10);
    EXPECT_NEAR(sz.imag[i], a * sx.imag[i] + b * sy.imag[i], 1e-10);
  }
}

TEST(StftPropertiesTest, ParsevalPerFrame) {
  const auto x = RandomVector(3000, 5);
  const auto s = Stft(x);
  const auto w = HannWindow(512);
  for (std::size_t t = 0; t < s.num_frames; ++t) {
    double time_energy = 0;
    for (std::size_t i = 0; i < 512; ++i) time_energy += std::pow(w[i] * x[t * 196 + i], 2);
    double spec = 0;
    for (std::size_t f = 0; f < 257; ++f) {
      const double p = s.Re(f, t) * s.Re(f, t) + s.Im(f, t) * s.Im(f, t);
      spec += (f == 0 || f == 256) ? p : 2 * p;
    }
    EXPECT_LE(std::abs(spec / 512.0 - time_energy) / time_energy, 1e-9);
  }
}

TEST(StftPropertiesTest, RoundTripForOtherFraming) {
  SpectralConfig cfg;
  cfg.win_length = 256;
  cfg.hop_length = 100;
  cfg.fft_size = 512;
  const auto x = RandomVector(5000, 9);
  const auto y = Istft(Stft(x, cfg));
  EXPECT_LE(InteriorRelRms(x, y, 256), 1e-6);
}

// ---------------------------------------------------------------------------

ComplexSpectrogram RandomSpec(std::size_t f, std::size_t t, std::uint32_t seed) {
  SpectralConfig cfg;
  cfg.fft_size = static_cast<int>(2 * (f - 1));
  cfg.win_length = cfg.fft_size;
  cfg.hop_length = 1;
  ComplexSpectrogram s(f, t, cfg);
  s.real = RandomVector(f * t, seed);
  s.imag = RandomVector(f * t, seed + 77);
  return s;
}

TEST(IdealMaskTest, IdentityAndZero) {
  const auto y = RandomSpec(5, 4, 1);
  const ComplexMask m = IdealComplexMask(y, y);
  for (std::size_t i = 0; i < m.real.size(); ++i) {
    EXPECT_NEAR(m.real[i], 1.0, 1e-6);
    EXPECT_NEAR(m.imag[i], 0.0, 1e-12);
  }
  ComplexSpectrogram zero = y;
  std::fill(zero.real.begin(), zero.real.end(), 0.0);
  std::fill(zero.imag.begin(), zero.imag.end(), 0.0);
  const ComplexMask z = IdealComplexMask(zero, y);
  for (std::size_t i = 0; i < z.real.size(); ++i) {
    EXPECT_EQ(z.real[i], 0.0);
    EXPECT_EQ(z.imag[i], 0.0);
  }
}

TEST(IdealMaskTest, ClipsToBound) {
  auto s = RandomSpec(5, 4, 3), y = RandomSpec(5, 4, 4);
  for (auto &v : s.real) v *= 100;
  const ComplexMask m = IdealComplexMask(s, y, kDefaultMaskEpsilon, 1.0);
  for (std::size_t i = 0; i < m.real.size(); ++i) {
    EXPECT_LE(std::abs(m.real[i]), 1.0);
    EXPECT_LE(std::abs(m.imag[i]), 1.0);
  }
}

TEST(IdealMaskTest, UnclippedReproducesClean) {
  const auto s = RandomSpec(9, 7, 5), y = RandomSpec(9, 7, 6);
  const ComplexMask m = IdealComplexMask(s, y, kDefaultMaskEpsilon, INFINITY);
  const ComplexSpectrogram e = ApplyMask(y, m);
  for (std::size_t i = 0; i < s.real.size(); ++i) {
    const std::complex<double> yy(y.real[i], y.imag[i]), ss(s.real[i], s.imag[i]);
    if (std::norm(yy) < 1e-4) continue;
    // Per-bin complex division oracle.
    const std::complex<double> mm = ss * std::conj(yy) / (std::norm(yy) + kDefaultMaskEpsilon);
    EXPECT_NEAR(m.real[i], mm.real(), 1e-12);
    EXPECT_NEAR(m.imag[i], mm.imag(), 1e-12);
    EXPECT_LE(std::abs(std::complex<double>(e.real[i], e.imag[i]) - ss) / std::abs(ss), 1e-6);
  }
}

TEST(IdealMaskTest, ReconstructionWithinTenthOfPpb) {
  // Scaled so |Y|^2 dominates epsilon by many orders of magnitude.
  auto s = RandomSpec(9, 7, 11), y = RandomSpec(9, 7, 12);
  for (auto *v : {&s.real, &s.imag, &y.real, &y.imag})
    for (auto &e : *v) e *= 1000.0;
  const ComplexSpectrogram e = ApplyMask(y, IdealComplexMask(s, y, kDefaultMaskEpsilon, INFINITY));
  for (std::size_t i = 0; i < s.real.size(); ++i) {
    const std::complex<double> ss(s.real[i], s.imag[i]), ee(e.real[i], e.imag[i]);
    EXPECT_LE(std::abs(ee - ss) / std::abs(ss), 1e-10);
  }
}

TEST(IdealMaskTest, RejectsMismatch) {
  EXPECT_THROW(IdealComplexMask(RandomSpec(5, 4, 1), RandomSpec(5, 3, 1)), ShapeError);
}

TEST(ApplyMaskTest, IdentityZeroAndScalarOracle) {
  const auto y = RandomSpec(3, 4, 8);
  ComplexMask one(3, 4, 1.0), zero(3, 4, 1.0);
  std::fill(one.real.begin(), one.real.end(), 1.0);
  const auto same = ApplyMask(y, one);
  EXPECT_EQ(same.real, y.real);
  EXPECT_EQ(same.imag, y.imag);
  const auto none = ApplyMask(y, zero);
  for (double v : none.real) EXPECT_EQ(v, 0.0);

  ComplexMask m(3, 4, 1.0);
  m.real = RandomVector(12, 30);
  m.imag = RandomVector(12, 31);
  const auto e = ApplyMask(y, m);
  for (std::size_t i = 0; i < 12; ++i) {
    const std::complex<double> p = std::complex<double>(m.real[i], m.imag[i]) *
                                   std::complex<double>(y.real[i], y.imag[i]);
    EXPECT_NEAR(e.real[i], p.real(), 1e-15);
    EXPECT_NEAR(e.imag[i], p.imag(), 1e-15);
  }
  EXPECT_THROW(ApplyMask(y, ComplexMask(3, 5, 1.0)), ShapeError);
}

TEST(ComplexSpectrogramTest, CropFrames) {
  const auto s = RandomSpec(5, 6, 4);
  const auto c = s.CropFrames(2, 3);
  EXPECT_EQ(c.num_frames, 3u);
  EXPECT_EQ(c.Re(4, 0), s.Re(4, 2));
  EXPECT_EQ(c.Im(1, 2), s.Im(1, 4));
  EXPECT_THROW(s.CropFrames(4, 3), InvalidArgument);
}

}  // namespace
}  // namespace avse
