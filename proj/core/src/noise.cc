// core/src/noise.cc

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

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "avse/corpus.h"
#include "avse/error.h"
#include "avse/fft.h"
#include "avse/random.h"

namespace avse {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

void NormalizeUnitVariance(std::vector<double> *x) {
  double mean = 0.0;
  for (double v : *x) mean += v;
  mean /= static_cast<double>(x->size());
  double power = 0.0;
  for (double &v : *x) {
    v -= mean;
    power += v * v;
  }
  power /= static_cast<double>(x->size());
  if (power <= 0.0) return;
  const double scale = 1.0 / std::sqrt(power);
  for (double &v : *x) v *= scale;
}

std::vector<double> WhiteNoise(std::size_t length, Rng &rng) {
  std::vector<double> x(length);
  for (double &v : x) v = Gaussian(rng);
  return x;
}

// Shapes white noise by an amplitude response evaluated per DFT bin.
template <typename Gain>
std::vector<double> ShapedNoise(std::size_t length, Rng &rng, int sample_rate,
                                Gain gain) {
  std::vector<double> x = WhiteNoise(length, rng);
  std::vector<std::complex<double>> spec(length / 2 + 1);
  RealDft(x, spec);
  for (std::size_t k = 0; k < spec.size(); ++k) {
    const double hz = static_cast<double>(k) * sample_rate /
                      static_cast<double>(length);
    spec[k] *= gain(hz);
  }
  InverseRealDft(spec, x);
  return x;
}

std::vector<double> BabbleLike(std::size_t length, std::uint64_t seed,
                               int sample_rate) {
  constexpr int kTalkers = 6;
  std::vector<double> out(length, 0.0);
  const double fs = sample_rate;
  for (int talker = 0; talker < kTalkers; ++talker) {
    Rng rng = MakeRng(seed, streams::kBabble, static_cast<std::uint64_t>(talker));
    const double f0 = Uniform(rng, 100.0, 220.0);
    const double vibrato_rate = Uniform(rng, 3.0, 6.0);
    const double vibrato_depth = Uniform(rng, 0.02, 0.06);
    const double am_rate = Uniform(rng, 2.0, 6.0);
    const double am_phase = Uniform(rng, 0.0, kTwoPi);
    const double cutoff = Uniform(rng, 1000.0, 3000.0);
    const double pole = std::exp(-kTwoPi * cutoff / fs);
    const int harmonics = static_cast<int>(3500.0 / (f0 * 1.1));
    std::vector<double> phase0(static_cast<std::size_t>(harmonics));
    for (double &p : phase0) p = Uniform(rng, 0.0, kTwoPi);

    double phase = 0.0, lp = 0.0;
    for (std::size_t n = 0; n < length; ++n) {
      const double t = n / fs;
      const double f = f0 * (1.0 + vibrato_depth * std::sin(kTwoPi * vibrato_rate * t));
      phase += kTwoPi * f / fs;
      double complex_tone = 0.0;
      for (int h = 1; h <= harmonics; ++h)
        complex_tone += std::sin(h * phase + phase0[h - 1]) / h;
      const double am = 0.5 * (1.0 + std::sin(kTwoPi * am_rate * t + am_phase));
      lp = (1.0 - pole) * (am * am * complex_tone) + pole * lp;
      out[n] += lp;
    }
  }
  return out;
}

std::vector<double> Hum(std::size_t length, std::uint64_t seed, int sample_rate) {
  Rng rng = MakeRng(seed, streams::kNoise, 1);
  const double mains = UniformIndex(rng, 2) == 0 ? 50.0 : 60.0;
  constexpr int kHarmonics = 8;
  double amp[kHarmonics], phase[kHarmonics];
  for (int h = 0; h < kHarmonics; ++h) {
    amp[h] = Uniform(rng, 0.3, 1.0) / (h + 1);
    phase[h] = Uniform(rng, 0.0, kTwoPi);
  }
  std::vector<double> out(length);
  for (std::size_t n = 0; n < length; ++n) {
    const double t = static_cast<double>(n) / sample_rate;
    double v = 0.05 * Gaussian(rng);
    for (int h = 0; h < kHarmonics; ++h)
      v += amp[h] * std::sin(kTwoPi * mains * (h + 1) * t + phase[h]);
    out[n] = v;
  }
  return out;
}

}  // namespace

std::string_view NoiseClassName(NoiseClass noise_class) {
  switch (noise_class) {
    case NoiseClass::kWhite: return "white";
    case NoiseClass::kPink: return "pink";
    case NoiseClass::kBabbleLike: return "babble_like";
    case NoiseClass::kHum: return "hum";
    case NoiseClass::kSpeechShaped: return "speech_shaped";
  }
  return "unknown";
}

NoiseClass ParseNoiseClass(std::string_view name) {
  for (NoiseClass c : kAllNoiseClasses)
    if (NoiseClassName(c) == name) return c;
  throw InvalidArgument("unknown noise class '" + std::string(name) + "'");
}

std::vector<double> SynthNoise(NoiseClass noise_class, std::size_t length,
                               std::uint64_t seed, int sample_rate) {
  if (length == 0) throw InvalidArgument("noise length must be > 0");
  Rng rng = MakeRng(seed, streams::kNoise, 0);
  std::vector<double> x;
  switch (noise_class) {
    case NoiseClass::kWhite:
      x = WhiteNoise(length, rng);
      break;
    case NoiseClass::kPink:
      // 1/f power: amplitude falls as f^-1/2, i.e. -3 dB per octave.
      x = ShapedNoise(length, rng, sample_rate, [](double hz) {
        return hz <= 0.0 ? 0.0 : 1.0 / std::sqrt(hz);
      });
      break;
    case NoiseClass::kSpeechShaped:
      // Flat to 500 Hz, then -6 dB per octave.
      x = ShapedNoise(length, rng, sample_rate, [](double hz) {
        return hz <= 500.0 ? 1.0 : 500.0 / hz;
      });
      break;
    case NoiseClass::kBabbleLike:
      x = BabbleLike(length, seed, sample_rate);
      break;
    case NoiseClass::kHum:
      x = Hum(length, seed, sample_rate);
      break;
  }
  NormalizeUnitVariance(&x);
  return x;
}

double MeanPower(std::span<const double> x) {
  if (x.empty()) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += v * v;
  return acc / static_cast<double>(x.size());
}

Mixture MixAtSnr(std::span<const double> clean, std::span<const double> noise,
                 double snr_db, std::uint64_t seed) {
  if (clean.empty()) throw InvalidArgument("mix_at_snr: empty clean signal");
  if (noise.empty()) throw InvalidArgument("mix_at_snr: empty noise signal");
  if (!std::isfinite(snr_db)) throw InvalidArgument("mix_at_snr: bad snr");
  const double clean_power = MeanPower(clean);
  if (!(clean_power > 0.0))
    throw InvalidArgument("mix_at_snr: clean signal has zero power");

  Mixture mix;
  Rng rng = MakeRng(seed, streams::kMixOffset);
  mix.offset = static_cast<std::size_t>(UniformIndex(rng, noise.size()));
  mix.scaled_noise.resize(clean.size());
  for (std::size_t n = 0; n < clean.size(); ++n)
    mix.scaled_noise[n] = noise[(mix.offset + n) % noise.size()];
  const double noise_power = MeanPower(mix.scaled_noise);
  if (!(noise_power > 0.0))
    throw InvalidArgument("mix_at_snr: noise has zero power");

  mix.gain = std::sqrt(clean_power /
                       (noise_power * std::pow(10.0, snr_db / 10.0)));
  mix.noisy.resize(clean.size());
  for (std::size_t n = 0; n < clean.size(); ++n) {
    mix.scaled_noise[n] *= mix.gain;
    mix.noisy[n] = clean[n] + mix.scaled_noise[n];
  }
  return mix;
}

}  // namespace avse
