// core/include/avse/random.h

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

#ifndef AVSE_RANDOM_H_
#define AVSE_RANDOM_H_

#include <cstdint>
#include <random>

namespace avse {

/// SplitMix64 finalizer; a bijection on 64-bit words.
std::uint64_t Mix64(std::uint64_t x);

/// Counter-based seed splitting: every (seed, stream, counter) triple maps to
/// an independent child seed, so any consumer can be replayed in isolation.
std::uint64_t DeriveSeed(std::uint64_t seed, std::uint64_t stream,
                         std::uint64_t counter = 0);

using Rng = std::mt19937_64;

inline Rng MakeRng(std::uint64_t seed, std::uint64_t stream,
                   std::uint64_t counter = 0) {
  return Rng(DeriveSeed(seed, stream, counter));
}

/// Uniform double in [0, 1) built from the top 53 bits; stable across
/// standard library implementations.
double UniformUnit(Rng &rng);
double Uniform(Rng &rng, double lo, double hi);
/// Integer in [0, n). n must be > 0.
std::uint64_t UniformIndex(Rng &rng, std::uint64_t n);
/// Standard normal via Box-Muller on UniformUnit.
double Gaussian(Rng &rng);

/// Stream identifiers for DeriveSeed. Values are part of the reproducibility
/// contract; never renumber.
namespace streams {
inline constexpr std::uint64_t kUtterance = 1;
inline constexpr std::uint64_t kNoise = 2;
inline constexpr std::uint64_t kMixOffset = 3;
inline constexpr std::uint64_t kNoisePlan = 4;
inline constexpr std::uint64_t kDuration = 5;
inline constexpr std::uint64_t kBatchCrop = 6;
inline constexpr std::uint64_t kShuffle = 7;
inline constexpr std::uint64_t kInit = 8;
inline constexpr std::uint64_t kPitch = 9;
inline constexpr std::uint64_t kFormant = 10;
inline constexpr std::uint64_t kEnvelope = 11;
inline constexpr std::uint64_t kBabble = 12;
}  // namespace streams

}  // namespace avse

#endif  // AVSE_RANDOM_H_
