// core/src/fft.cc

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

#include "avse/fft.h"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <utility>

#include "avse/error.h"

namespace avse {
namespace {

// FFTW plan creation is not thread-safe; execution with the new-array
// interface is. Plans live for the whole process.
class PlanCache {
 public:
  static PlanCache &Instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan Get(std::size_t n, bool inverse) {
    std::lock_guard<std::mutex> lock(mutex_);
    auto key = std::make_pair(n, inverse);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<double> real(n);
    std::vector<fftw_complex> cplx(n / 2 + 1);
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED | FFTW_DESTROY_INPUT;
    fftw_plan plan =
        inverse ? fftw_plan_dft_c2r_1d(static_cast<int>(n), cplx.data(),
                                       real.data(), flags)
                : fftw_plan_dft_r2c_1d(static_cast<int>(n), real.data(),
                                       cplx.data(), flags);
    if (!plan) throw Error("fftw: could not create plan");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<std::size_t, bool>, fftw_plan> plans_;
};

}  // namespace

void RealDft(std::span<const double> input,
             std::span<std::complex<double>> output) {
  const std::size_t n = input.size();
  if (n == 0 || output.size() != n / 2 + 1)
    throw ShapeError("RealDft: bad sizes");
  fftw_plan plan = PlanCache::Instance().Get(n, false);
  std::vector<double> scratch(input.begin(), input.end());
  fftw_execute_dft_r2c(plan, scratch.data(),
                       reinterpret_cast<fftw_complex *>(output.data()));
}

void InverseRealDft(std::span<const std::complex<double>> spectrum,
                    std::span<double> output) {
  const std::size_t n = output.size();
  if (n == 0 || spectrum.size() != n / 2 + 1)
    throw ShapeError("InverseRealDft: bad sizes");
  fftw_plan plan = PlanCache::Instance().Get(n, true);
  std::vector<std::complex<double>> scratch(spectrum.begin(), spectrum.end());
  scratch[0].imag(0.0);
  if (n % 2 == 0) scratch.back().imag(0.0);
  fftw_execute_dft_c2r(plan, reinterpret_cast<fftw_complex *>(scratch.data()),
                       output.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double &v : output) v *= scale;
}

}  // namespace avse
