// core/include/avse/fft.h

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

#ifndef AVSE_FFT_H_
#define AVSE_FFT_H_

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace avse {

/// Real-input DFT of length n (any n >= 1). Output has n/2 + 1 bins,
/// unnormalized: X[k] = sum_m x[m] exp(-2 pi i k m / n).
void RealDft(std::span<const double> input,
             std::span<std::complex<double>> output);

/// Inverse of RealDft including the 1/n factor. `spectrum` has n/2 + 1
/// bins; imaginary parts of DC and (for even n) Nyquist are ignored.
void InverseRealDft(std::span<const std::complex<double>> spectrum,
                    std::span<double> output);

}  // namespace avse

#endif  // AVSE_FFT_H_
