// tests/layers_test.cc

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

#include "avse/layers.h"

#include <gtest/gtest.h>

#include <cmath>

#include "avse/error.h"
#include "test_util.h"

namespace avse {
namespace {

using testing::Dot;
using testing::MaxFdError;
using testing::RandomTensor;
using testing::RandomVector;

std::vector<Parameter *> Params(Layer &layer) {
  std::vector<Parameter *> p;
  layer.CollectParameters(&p);
  return p;
}

void Randomize(Layer &layer, std::uint32_t seed) {
  for (Parameter *p : Params(layer)) {
    p->value.values() = RandomVector(p->value.size(), seed++, -0.5, 0.5);
    p->grad.SetZero();
  }
}

// Checks d<f(x), g>/dx and d/dparams against central differences.
void CheckGradients(Layer &layer, Tensor x, std::uint32_t seed, double tol = 1e-6) {
  const Tensor y0 = layer.Forward(x, Mode::kTrain);
  const Tensor g = RandomTensor(y0.shape(), seed);
  for (Parameter *p : Params(layer)) p->grad.SetZero();
  const Tensor dx = layer.Backward(g);
  auto loss = [&] { return Dot(layer.Forward(x, Mode::kTrain).values(), g.values()); };
  EXPECT_LT(MaxFdError(x.values(), dx.values(), loss), tol) << "input gradient";
  for (Parameter *p : Params(layer)) {
    const std::vector<double> analytic = p->grad.values();
    EXPECT_LT(MaxFdError(p->value.values(), analytic, loss), tol) << p->name;
  }
}

double At4(const Tensor &t, std::size_t n, std::size_t c, std::ptrdiff_t i, std::ptrdiff_t j) {
  if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(t.dim(2)) ||
      j >= static_cast<std::ptrdiff_t>(t.dim(3)))
    return 0.0;
  return t[((n * t.dim(1) + c) * t.dim(2) + i) * t.dim(3) + j];
}

TEST(Conv2dTest, MatchesDirectLoop) {
  for (std::size_t stride : {1u, 2u}) {
    Conv2d conv("c", 3, 4, stride, true);
    Randomize(conv, 11);
    const Tensor x = RandomTensor({2, 3, 5, 9}, 3);
    const Tensor y = conv.Forward(x, Mode::kTrain);
    const std::size_t fo_n = (9 - 1) / stride + 1;
    ASSERT_EQ(y.shape(), (Shape{2, 4, 5, fo_n}));
    const auto p = Params(conv);
    const Tensor &w = p[0]->value, &b = p[1]->value;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t o = 0; o < 4; ++o)
        for (std::size_t t = 0; t < 5; ++t)
          for (std::size_t fo = 0; fo < fo_n; ++fo) {
            double acc = b[o];
            for (std::size_t i = 0; i < 3; ++i)
              for (std::ptrdiff_t kt = 0; kt < 3; ++kt)
                for (std::ptrdiff_t kf = 0; kf < 3; ++kf)
                  acc += w[o * 27 + (i * 3 + kt) * 3 + kf] *
                         At4(x, n, i, static_cast<std::ptrdiff_t>(t) + kt - 1,
                             static_cast<std::ptrdiff_t>(fo * stride) + kf - 1);
            EXPECT_NEAR(y[((n * 4 + o) * 5 + t) * fo_n + fo], acc, 1e-12);
          }
  }
}

TEST(Conv2dTest, GradientsMatchFiniteDifferences) {
  Conv2d conv("c", 2, 3, 2, true);
  Randomize(conv, 5);
  CheckGradients(conv, RandomTensor({2, 2, 4, 7}, 9), 13);
}

TEST(ConvTranspose2dTest, MatchesScatterLoop) {
  for (std::size_t stride : {1u, 2u}) {
    ConvTranspose2d conv("t", 3, 2, stride);
    Randomize(conv, 21);
    const std::size_t in_f = 5, out_f = stride == 1 ? 5 : 9;
    conv.SetOutputFreq(out_f);
    const Tensor x = RandomTensor({2, 3, 4, in_f}, 4);
    const Tensor y = conv.Forward(x, Mode::kTrain);
    ASSERT_EQ(y.shape(), (Shape{2, 2, 4, out_f}));
    const Tensor &w = Params(conv)[0]->value;
    Tensor expect({2, 2, 4, out_f});
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t t = 0; t < 4; ++t)
          for (std::size_t f = 0; f < in_f; ++f)
            for (std::size_t o = 0; o < 2; ++o)
              for (std::ptrdiff_t kt = 0; kt < 3; ++kt)
                for (std::ptrdiff_t kf = 0; kf < 3; ++kf) {
                  const std::ptrdiff_t to = static_cast<std::ptrdiff_t>(t) + kt - 1;
                  const std::ptrdiff_t fo = static_cast<std::ptrdiff_t>(f * stride) + kf - 1;
                  if (to < 0 || to >= 4 || fo < 0 || fo >= static_cast<std::ptrdiff_t>(out_f))
                    continue;
                  expect[((n * 2 + o) * 4 + to) * out_f + fo] +=
                      w[i * 18 + (o * 3 + kt) * 3 + kf] * x[((n * 3 + i) * 4 + t) * in_f + f];
                }
    for (std::size_t k = 0; k < y.size(); ++k) EXPECT_NEAR(y[k], expect[k], 1e-12);
  }
}

TEST(ConvTranspose2dTest, RejectsIncompatibleOutputSize) {
  ConvTranspose2d conv("t", 1, 1, 2);
  conv.SetOutputFreq(12);
  EXPECT_THROW(conv.Forward(Tensor({1, 1, 2, 5}), Mode::kTrain), ShapeError);
}

TEST(ConvTranspose2dTest, GradientsMatchFiniteDifferences) {
  ConvTranspose2d conv("t", 2, 3, 2);
  Randomize(conv, 8);
  conv.SetOutputFreq(8);
  CheckGradients(conv, RandomTensor({2, 2, 3, 4}, 2), 6);
}

TEST(Conv3dTest, MatchesDirectLoop) {
  Conv3d conv("v", 2, 3);
  Randomize(conv, 31);
  const std::size_t T = 4, H = 7, W = 10, Ho = 4, Wo = 5;
  const Tensor x = RandomTensor({2, 2, T, H, W}, 7);
  const Tensor y = conv.Forward(x, Mode::kTrain);
  ASSERT_EQ(y.shape(), (Shape{2, 3, T, Ho, Wo}));
  const Tensor &w = Params(conv)[0]->value;
  auto in = [&](std::size_t n, std::size_t c, std::ptrdiff_t t, std::ptrdiff_t h,
                std::ptrdiff_t ww) {
    if (t < 0 || h < 0 || ww < 0 || t >= (std::ptrdiff_t)T || h >= (std::ptrdiff_t)H ||
        ww >= (std::ptrdiff_t)W)
      return 0.0;
    return x[(((n * 2 + c) * T + t) * H + h) * W + ww];
  };
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 3; ++o)
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t ho = 0; ho < Ho; ++ho)
          for (std::size_t wo = 0; wo < Wo; ++wo) {
            double acc = 0;
            for (std::size_t c = 0; c < 2; ++c)
              for (std::ptrdiff_t kt = 0; kt < 3; ++kt)
                for (std::ptrdiff_t kh = 0; kh < 3; ++kh)
                  for (std::ptrdiff_t kw = 0; kw < 3; ++kw)
                    acc += w[o * 54 + ((c * 3 + kt) * 3 + kh) * 3 + kw] *
                           in(n, c, (std::ptrdiff_t)t + kt - 1, 2 * (std::ptrdiff_t)ho + kh - 1,
                              2 * (std::ptrdiff_t)wo + kw - 1);
            EXPECT_NEAR(y[(((n * 3 + o) * T + t) * Ho + ho) * Wo + wo], acc, 1e-12);
          }
}

TEST(Conv3dTest, GradientsMatchFiniteDifferences) {
  Conv3d conv("v", 2, 2);
  Randomize(conv, 3);
  CheckGradients(conv, RandomTensor({1, 2, 3, 5, 6}, 12), 4);
}

TEST(BatchNormTest, TrainModeNormalizesPerChannel) {
  BatchNorm bn("bn", 3);
  const Tensor x = RandomTensor({4, 3, 5, 6}, 17, -3, 5);
  const Tensor y = bn.Forward(x, Mode::kTrain);
  for (std::size_t c = 0; c < 3; ++c) {
    double s = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t b = 0; b < 4; ++b)
      for (std::size_t i = 0; i < 30; ++i) {
        const double v = y[(b * 3 + c) * 30 + i];
        s += v;
        sq += v * v;
        ++n;
      }
    EXPECT_NEAR(s / n, 0.0, 1e-12);
    EXPECT_NEAR(sq / n, 1.0, 1e-4);  // eps = 1e-5 shrinks it slightly
  }
}

TEST(BatchNormTest, InferenceUsesRunningStatistics) {
  BatchNorm bn("bn", 1, 1.0);  // momentum 1: running stats = last batch
  const Tensor x = RandomTensor({2, 1, 3, 4}, 5, 1, 3);
  bn.Forward(x, Mode::kTrain);
  double mean = 0;
  for (double v : x.values()) mean += v;
  mean /= x.size();
  double sq = 0;
  for (double v : x.values()) sq += (v - mean) * (v - mean);
  const double unbiased = sq / (x.size() - 1);
  const Tensor probe({1, 1, 1, 1}, 2.0);
  const Tensor y = bn.Forward(probe, Mode::kInference);
  EXPECT_NEAR(y[0], (2.0 - mean) / std::sqrt(unbiased + 1e-5), 1e-12);
}

TEST(BatchNormTest, DuplicatedItemsAgreeInInference) {
  BatchNorm bn("bn", 2);
  bn.Forward(RandomTensor({3, 2, 2, 2}, 1), Mode::kTrain);
  Tensor one = RandomTensor({1, 2, 2, 3}, 2);
  Tensor two({2, 2, 2, 3});
  std::copy(one.values().begin(), one.values().end(), two.values().begin());
  std::copy(one.values().begin(), one.values().end(), two.values().begin() + one.size());
  const Tensor a = bn.Forward(one, Mode::kInference);
  const Tensor b = bn.Forward(two, Mode::kInference);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i], b[i]);
    EXPECT_EQ(a[i], b[i + a.size()]);
  }
}

TEST(BatchNormTest, GradientsMatchFiniteDifferences) {
  BatchNorm bn("bn", 2);
  Randomize(bn, 2);
  CheckGradients(bn, RandomTensor({3, 2, 2, 3}, 10), 11);
}

TEST(BatchNormTest, InferenceGradientsMatchFiniteDifferences) {
  BatchNorm bn("bn", 2);
  Randomize(bn, 2);
  bn.Forward(RandomTensor({3, 2, 2, 3}, 1), Mode::kTrain);
  Tensor x = RandomTensor({2, 2, 2, 3}, 3);
  const Tensor y = bn.Forward(x, Mode::kInference);
  const Tensor g = RandomTensor(y.shape(), 4);
  const Tensor dx = bn.Backward(g);
  auto loss = [&] { return Dot(bn.Forward(x, Mode::kInference).values(), g.values()); };
  EXPECT_LT(MaxFdError(x.values(), dx.values(), loss), 1e-6);
}

TEST(LeakyReluTest, ForwardAndGradient) {
  LeakyRelu act(0.2);
  Tensor x({1, 1, 1, 4});
  x.values() = {-2.0, -0.5, 0.5, 3.0};
  const Tensor y = act.Forward(x, Mode::kTrain);
  EXPECT_EQ(y.values(), (std::vector<double>{-0.4, -0.1, 0.5, 3.0}));
  Tensor g({1, 1, 1, 4}, 1.0);
  EXPECT_EQ(act.Backward(g).values(), (std::vector<double>{0.2, 0.2, 1.0, 1.0}));
}

TEST(FreqAvgPoolTest, CeilSemantics) {
  FreqAvgPool pool;
  Tensor x({1, 1, 1, 5});
  x.values() = {1, 3, 5, 7, 9};
  const Tensor y = pool.Forward(x, Mode::kTrain);
  EXPECT_EQ(y.values(), (std::vector<double>{2, 6, 9}));
  EXPECT_EQ(FreqAvgPool::OutputFreq(65), 33u);
  EXPECT_EQ(FreqAvgPool::OutputFreq(1), 1u);
  CheckGradients(pool, RandomTensor({2, 2, 2, 7}, 3), 5);
}

TEST(FreqUpsampleTest, NearestAndCrop) {
  FreqUpsample up;
  up.SetTarget(5);
  Tensor x({1, 1, 1, 3});
  x.values() = {1, 2, 3};
  EXPECT_EQ(up.Forward(x, Mode::kTrain).values(), (std::vector<double>{1, 1, 2, 2, 3}));
  CheckGradients(up, RandomTensor({2, 2, 2, 3}, 3), 5);
}

TEST(PointwiseLinearTest, MatchesLoopAndGradients) {
  PointwiseLinear lin("p", 3, 2);
  Randomize(lin, 4);
  const Tensor x = RandomTensor({2, 3, 2, 4}, 6);
  const Tensor y = lin.Forward(x, Mode::kTrain);
  const auto p = Params(lin);
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t o = 0; o < 2; ++o)
      for (std::size_t k = 0; k < 8; ++k) {
        double acc = p[1]->value[o];
        for (std::size_t i = 0; i < 3; ++i) acc += p[0]->value[o * 3 + i] * x[(n * 3 + i) * 8 + k];
        EXPECT_NEAR(y[(n * 2 + o) * 8 + k], acc, 1e-12);
      }
  CheckGradients(lin, x, 9);
}

double Sig(double v) { return 1.0 / (1.0 + std::exp(-v)); }

TEST(LstmTest, MatchesScalarRecurrence) {
  const std::size_t d = 3, h = 2, T = 4, b = 2;
  Lstm lstm("l", d, h);
  Randomize(lstm, 14);
  const Tensor x = RandomTensor({b, 1, T, d}, 15);
  const Tensor y = lstm.Forward(x, Mode::kTrain);
  ASSERT_EQ(y.shape(), (Shape{b, 1, T, h}));
  const auto p = Params(lstm);
  const Tensor &wih = p[0]->value, &whh = p[1]->value, &bias = p[2]->value;
  for (std::size_t n = 0; n < b; ++n) {
    std::vector<double> hs(h, 0.0), cs(h, 0.0);
    for (std::size_t t = 0; t < T; ++t) {
      std::vector<double> z(4 * h);
      for (std::size_t r = 0; r < 4 * h; ++r) {
        double acc = bias[r];
        for (std::size_t k = 0; k < d; ++k) acc += wih[r * d + k] * x[(n * T + t) * d + k];
        for (std::size_t k = 0; k < h; ++k) acc += whh[r * h + k] * hs[k];
        z[r] = acc;
      }
      for (std::size_t j = 0; j < h; ++j) {
        const double i = Sig(z[j]), f = Sig(z[h + j]), g = std::tanh(z[2 * h + j]),
                     o = Sig(z[3 * h + j]);
        cs[j] = f * cs[j] + i * g;
        hs[j] = o * std::tanh(cs[j]);
        EXPECT_NEAR(y[(n * T + t) * h + j], hs[j], 1e-12);
      }
    }
  }
}

TEST(LstmTest, GradientsMatchFiniteDifferences) {
  Lstm lstm("l", 3, 4);
  Randomize(lstm, 1);
  CheckGradients(lstm, RandomTensor({2, 1, 5, 3}, 2), 3);
}

TEST(ScaledTanhTest, BoundedAndGradient) {
  ScaledTanh act(2.0);
  const Tensor x = RandomTensor({1, 2, 3, 4}, 8, -10, 10);
  const Tensor y = act.Forward(x, Mode::kTrain);
  for (double v : y.values()) EXPECT_LE(std::abs(v), 2.0);
  CheckGradients(act, RandomTensor({1, 2, 3, 4}, 8), 9);
}

TEST(TensorOpsTest, MeanBroadcastAndSequenceRoundTrip) {
  const Tensor x = RandomTensor({2, 3, 4, 5}, 2);
  const Tensor m = MeanOverFreq(x);
  ASSERT_EQ(m.shape(), (Shape{2, 3, 4, 1}));
  double s = 0;
  for (std::size_t f = 0; f < 5; ++f) s += x[f];
  EXPECT_NEAR(m[0], s / 5, 1e-15);
  const Tensor bc = BroadcastFreq(m, 6);
  EXPECT_EQ(bc[5], m[0]);
  // Adjoint pairs: <A x, y> == <x, A^T y>.
  const Tensor gy = RandomTensor(m.shape(), 3);
  EXPECT_NEAR(Dot(m.values(), gy.values()), Dot(x.values(), MeanOverFreqBackward(gy, 5).values()),
              1e-12);
  const Tensor gb = RandomTensor(bc.shape(), 4);
  EXPECT_NEAR(Dot(bc.values(), gb.values()), Dot(m.values(), BroadcastFreqBackward(gb).values()),
              1e-12);
  const Tensor seq = FramesToSequence(x);
  ASSERT_EQ(seq.shape(), (Shape{2, 1, 4, 15}));
  EXPECT_EQ(seq[5], x[20]);  // channel 1, frame 0, bin 0 follows channel 0's five bins
  EXPECT_EQ(SequenceToFrames(seq, 3, 5).values(), x.values());
}

TEST(TensorOpsTest, AccumulateAndFinite) {
  Tensor dst;
  const Tensor a({2}, 1.5);
  Accumulate(&dst, a);
  Accumulate(&dst, a);
  EXPECT_EQ(dst.values(), (std::vector<double>{3.0, 3.0}));
  EXPECT_TRUE(AllFinite(dst));
  dst[1] = std::nan("");
  EXPECT_FALSE(AllFinite(dst));
}

TEST(InitTest, UniformFanInRange) {
  Parameter p{"w", Tensor({100, 9}), Tensor({100, 9})};
  InitUniformFanIn(&p, 9, 42);
  double lo = 1, hi = -1;
  for (double v : p.value.values()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  EXPECT_GE(lo, -1.0 / 3.0);
  EXPECT_LE(hi, 1.0 / 3.0);
  EXPECT_LT(lo, -0.3);
  EXPECT_GT(hi, 0.3);
}

}  // namespace
}  // namespace avse
