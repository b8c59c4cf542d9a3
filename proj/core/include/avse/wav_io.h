// core/include/avse/wav_io.h

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

#ifndef AVSE_WAV_IO_H_
#define AVSE_WAV_IO_H_

#include <span>
#include <string>
#include <vector>

namespace avse {

struct WaveData {
  int sample_rate = 16000;
  std::vector<double> samples;  // in [-1, 1), int16 / 32768
};

/// Reads a RIFF/WAVE file holding 16-bit PCM mono audio.
WaveData ReadWav(const std::string &path);

/// Writes 16-bit PCM mono; samples are scaled by 32768, rounded and
/// saturated to the int16 range.
void WriteWav(const std::string &path, std::span<const double> samples,
              int sample_rate = 16000);

/// The value a sample takes after a write/read cycle.
double QuantizePcm16(double x);

}  // namespace avse

#endif  // AVSE_WAV_IO_H_
