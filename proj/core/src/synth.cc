// core/src/synth.cc

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
#include <numbers>
#include <string>

#include "avse/corpus.h"
#include "avse/error.h"
#include "avse/random.h"

namespace avse {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMaxHarmonicHz = 4000.0;

struct Trajectories {
  double pitch_base, pitch_depth, pitch_rate, pitch_phase, pitch_slope;
  double f1_rate, f1_phase, f2_rate, f2_phase;
  std::vector<double> centers, widths, amps;

  double Pitch(double t) const {
    return std::clamp(pitch_base +
                          pitch_depth * std::sin(kTwoPi * pitch_rate * t + pitch_phase) -
                          pitch_slope * t,
                      90.0, 220.0);
  }
  double F1(double t) const {
    return 300.0 + 500.0 * (0.5 + 0.5 * std::sin(kTwoPi * f1_rate * t + f1_phase));
  }
  double F2(double t) const {
    return 900.0 + 1300.0 * (0.5 + 0.5 * std::sin(kTwoPi * f2_rate * t + f2_phase));
  }
  // Sum of raised-cosine syllable bumps, saturated at 1.
  double Envelope(double t) const {
    double e = 0.0;
    for (std::size_t k = 0; k < centers.size(); ++k) {
      const double u = (t - centers[k]) / widths[k];
      if (std::abs(u) < 0.5) e += amps[k] * 0.5 * (1.0 + std::cos(kTwoPi * u));
    }
    return std::min(e, 1.0);
  }
};

Trajectories DrawTrajectories(std::uint64_t seed, double duration) {
  Trajectories tr;
  Rng pitch = MakeRng(seed, streams::kPitch);
  tr.pitch_base = Uniform(pitch, 110.0, 170.0);
  tr.pitch_depth = Uniform(pitch, 10.0, 40.0);
  tr.pitch_rate = Uniform(pitch, 0.5, 2.0);
  tr.pitch_phase = Uniform(pitch, 0.0, kTwoPi);
  tr.pitch_slope = Uniform(pitch, 0.0, 15.0);

  Rng formant = MakeRng(seed, streams::kFormant);
  tr.f1_rate = Uniform(formant, 1.5, 4.0);
  tr.f1_phase = Uniform(formant, 0.0, kTwoPi);
  tr.f2_rate = Uniform(formant, 1.0, 3.0);
  tr.f2_phase = Uniform(formant, 0.0, kTwoPi);

  Rng env = MakeRng(seed, streams::kEnvelope);
  const double rate = Uniform(env, 3.0, 5.0);
  const std::size_t syllables =
      std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(duration * rate)));
  const double slot = duration / static_cast<double>(syllables);
  for (std::size_t k = 0; k < syllables; ++k) {
    tr.centers.push_back((k + 0.5) * slot + Uniform(env, -0.15, 0.15) * slot);
    tr.widths.push_back(Uniform(env, 0.7, 1.0) * slot);
    tr.amps.push_back(Uniform(env, 0.5, 1.0));
  }
  return tr;
}

double Resonance(double hz, double centre, double bandwidth) {
  const double d = (hz - centre) / bandwidth;
  return 1.0 / (1.0 + d * d);
}

double Coverage(double signed_distance) {
  return std::clamp(0.5 + signed_distance, 0.0, 1.0);
}

void DrawLipFrame(double aperture, double f2, double *frame) {
  const double cy = 32.0, cx = 64.0;
  const double half_width = 36.0 + 6.0 * (f2 - 900.0) / 1300.0;
  const double half_open = 1.5 + 22.0 * aperture;
  const double lip = 7.0;
  for (std::size_t y = 0; y < kVideoHeight; ++y) {
    for (std::size_t x = 0; x < kVideoWidth; ++x) {
      const double dx = x + 0.5 - cx, dy = y + 0.5 - cy;
      // Approximate signed distances (in pixels, positive inside).
      const double r_in = std::sqrt(dx * dx / (half_width * half_width) +
                                    dy * dy / (half_open * half_open));
      const double r_out = std::sqrt(dx * dx / ((half_width + lip) * (half_width + lip)) +
                                     dy * dy / ((half_open + lip) * (half_open + lip)));
      const double in_mouth = Coverage((1.0 - r_in) * half_open);
      const double in_lips = Coverage((1.0 - r_out) * (half_open + lip));
      double v = 0.45;
      v += (0.80 - v) * in_lips;
      v += (0.05 - v) * in_mouth;
      frame[y * kVideoWidth + x] = v;
    }
  }
}

void DrawTongueFrame(double f1, double f2, Rng &speckle, double *frame) {
  const double height = 12.0 + 30.0 * (f1 - 300.0) / 500.0;
  const double tip_shift = -10.0 + 20.0 * (f2 - 900.0) / 1300.0;
  for (std::size_t y = 0; y < kVideoHeight; ++y) {
    for (std::size_t x = 0; x < kVideoWidth; ++x) {
      const double u = (x + 0.5 - 64.0 - tip_shift) / 56.0;
      double v = 0.1 + Uniform(speckle, 0.0, 0.08);
      if (std::abs(u) <= 1.0) {
        const double arc_y = height + 14.0 * u * u;
        const double d = (y + 0.5 - arc_y) / 2.0;
        v += 0.8 * std::exp(-d * d);
      }
      frame[y * kVideoWidth + x] = std::min(v, 1.0);
    }
  }
}

}  // namespace

SynthUtterance SynthesizeUtterance(std::uint64_t seed, double duration_s,
                                   int sample_rate) {
  if (!(duration_s >= 0.5 && duration_s <= 10.0))
    throw InvalidArgument("utterance duration must lie in [0.5, 10] s, got " +
                          std::to_string(duration_s));
  const Trajectories tr = DrawTrajectories(seed, duration_s);
  const double fs = sample_rate;
  const auto num_samples = static_cast<std::size_t>(std::lround(duration_s * fs));

  SynthUtterance utt;
  utt.audio.resize(num_samples);
  const int max_harmonics = static_cast<int>(kMaxHarmonicHz / 90.0);
  std::vector<double> amp(static_cast<std::size_t>(max_harmonics) + 1);
  double phase = 0.0;
  for (std::size_t n = 0; n < num_samples; ++n) {
    const double t = n / fs;
    const double f0 = tr.Pitch(t);
    const double f1 = tr.F1(t), f2 = tr.F2(t);
    phase += kTwoPi * f0 / fs;
    double norm = 0.0, sum = 0.0;
    for (int h = 1; h <= max_harmonics && h * f0 < kMaxHarmonicHz; ++h) {
      const double hz = h * f0;
      const double a = (Resonance(hz, f1, 80.0) + 0.7 * Resonance(hz, f2, 120.0) + 0.02) /
                       std::sqrt(static_cast<double>(h));
      norm += 0.5 * a * a;
      sum += a * std::sin(h * phase);
    }
    // Source is held at unit power so the waveform RMS follows the envelope.
    utt.audio[n] = 0.08 * tr.Envelope(t) * sum / std::sqrt(norm);
  }

  const auto frames = static_cast<std::size_t>(std::floor(duration_s * kVideoFps + 1e-9));
  const std::size_t frame_size = kVideoHeight * kVideoWidth;
  for (VideoFrames *video : {&utt.lip, &utt.tongue}) {
    video->num_frames = frames;
    video->height = kVideoHeight;
    video->width = kVideoWidth;
    video->fps = kVideoFps;
    video->pixels.resize(frames * frame_size);
  }
  Rng speckle = MakeRng(seed, streams::kUtterance, 1);
  for (std::size_t k = 0; k < frames; ++k) {
    const double t = k / kVideoFps;
    const double e = tr.Envelope(t), f1 = tr.F1(t), f2 = tr.F2(t);
    utt.envelope.push_back(e);
    utt.f1_hz.push_back(f1);
    DrawLipFrame(e, f2, utt.lip.pixels.data() + k * frame_size);
    DrawTongueFrame(f1, f2, speckle, utt.tongue.pixels.data() + k * frame_size);
  }
  return utt;
}

}  // namespace avse
