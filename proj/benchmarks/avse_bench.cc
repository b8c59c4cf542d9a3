// benchmarks/avse_bench.cc

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

#include <benchmark/benchmark.h>

#include <random>
#include <string>
#include <vector>

#include "avse/corpus.h"
#include "avse/layers.h"
#include "avse/losses.h"
#include "avse/metrics.h"
#include "avse/model.h"
#include "avse/peranalysis.h"
#include "avse/spectral.h"

namespace avse {
namespace {

std::vector<double> Noise(std::size_t n, unsigned seed) {
  std::mt19937 gen(seed);
  std::uniform_real_distribution<double> d(-1, 1);
  std::vector<double> x(n);
  for (auto &v : x) v = d(gen);
  return x;
}

Tensor NoiseTensor(const Shape &shape, unsigned seed) {
  Tensor t(shape);
  t.values() = Noise(t.size(), seed);
  return t;
}

void BM_Stft(benchmark::State &state) {
  const auto x = Noise(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(Stft(x));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Stft)->Arg(16000)->Arg(48000);

void BM_Istft(benchmark::State &state) {
  const ComplexSpectrogram s = Stft(Noise(static_cast<std::size_t>(state.range(0)), 2));
  for (auto _ : state) benchmark::DoNotOptimize(Istft(s));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Istft)->Arg(16000)->Arg(48000);

// One encoder-sized 3x3 convolution, b x c x 80 frames x 257 bins.
void BM_Conv2dForward(benchmark::State &state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  Conv2d conv("bench", c, c, 1, false);
  std::vector<Parameter *> params;
  conv.CollectParameters(&params);
  for (Parameter *p : params) p->value.values() = Noise(p->value.size(), 3);
  const Tensor x = NoiseTensor({1, c, 80, 257}, 4);
  for (auto _ : state) benchmark::DoNotOptimize(conv.Forward(x, Mode::kInference));
}
BENCHMARK(BM_Conv2dForward)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Conv2dBackward(benchmark::State &state) {
  const std::size_t c = static_cast<std::size_t>(state.range(0));
  Conv2d conv("bench", c, c, 1, false);
  const Tensor x = NoiseTensor({1, c, 80, 257}, 5);
  const Tensor y = conv.Forward(x, Mode::kTrain);
  const Tensor dy = NoiseTensor(y.shape(), 6);
  for (auto _ : state) benchmark::DoNotOptimize(conv.Backward(dy));
}
BENCHMARK(BM_Conv2dBackward)->Arg(4)->Arg(16)->Unit(benchmark::kMillisecond);

// Full default-size network on one second of input.
void BM_ModelForward(benchmark::State &state) {
  const ModelKind kind = state.range(0) ? ModelKind::kTeacher : ModelKind::kStudent;
  const ModelConfig c;
  AvseNet net(kind, c, 1);
  const std::size_t t = 80;
  const Tensor audio = NoiseTensor({1, 2, t, c.freq_bins}, 7);
  const Tensor lips = NoiseTensor({1, 3, t, c.video_height, c.video_width}, 8);
  const Tensor tongues = NoiseTensor({1, 3, t, c.video_height, c.video_width}, 9);
  for (auto _ : state)
    benchmark::DoNotOptimize(net.ForwardTensors(audio, lips, tongues, Mode::kInference, nullptr));
  state.SetLabel(std::string(ModelKindName(kind)));
}
BENCHMARK(BM_ModelForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_LossSpkd(benchmark::State &state) {
  const std::size_t b = static_cast<std::size_t>(state.range(0));
  FeatureTrace t, s;
  for (int l = 0; l < 4; ++l) {
    t.names.push_back("layer" + std::to_string(l));
    t.features.push_back(NoiseTensor({b, 16, 40, 64}, 10 + l));
    s.features.push_back(NoiseTensor({b, 16, 40, 64}, 20 + l));
  }
  s.names = t.names;
  std::vector<Tensor> grads;
  for (auto _ : state) benchmark::DoNotOptimize(LossSpkd(t, s, &grads));
}
BENCHMARK(BM_LossSpkd)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);

void BM_Stoi(benchmark::State &state) {
  const SynthUtterance u = SynthesizeUtterance(1, 3.0);
  const auto noisy = MixAtSnr(u.audio, SynthNoise(NoiseClass::kPink, u.audio.size(), 2), 0, 3).noisy;
  for (auto _ : state) benchmark::DoNotOptimize(Stoi(u.audio, noisy));
}
BENCHMARK(BM_Stoi)->Unit(benchmark::kMillisecond);

void BM_Align(benchmark::State &state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937 gen(4);
  std::vector<std::string> r(n), h(n);
  for (std::size_t i = 0; i < n; ++i) {
    r[i] = std::string(1, static_cast<char>('a' + gen() % 20));
    h[i] = gen() % 4 ? r[i] : std::string(1, static_cast<char>('a' + gen() % 20));
  }
  for (auto _ : state) benchmark::DoNotOptimize(Align(r, h));
}
BENCHMARK(BM_Align)->Arg(6)->Arg(60)->Arg(600);

}  // namespace
}  // namespace avse

BENCHMARK_MAIN();
