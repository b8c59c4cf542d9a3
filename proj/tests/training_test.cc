// tests/training_test.cc

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

#include "avse/training.h"

#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "avse/error.h"
#include "avse/metrics.h"
#include "test_util.h"

namespace avse {
namespace {

// ---------------------------------------------------------------------------
// Schedule and optimizer.

TEST(PlateauTest, ElevenFlatEpochsDecayOnce) {
  PlateauScheduler s(1e-3, 0.1, 10);
  std::vector<double> lrs;
  for (int e = 1; e <= 21; ++e) {
    s.Step(0.5);
    lrs.push_back(s.lr());
  }
  for (int e = 1; e <= 10; ++e) EXPECT_EQ(lrs[e - 1], 1e-3) << e;
  for (int e = 11; e <= 20; ++e) EXPECT_DOUBLE_EQ(lrs[e - 1], 1e-4) << e;
  EXPECT_DOUBLE_EQ(lrs[20], 1e-5);
}

TEST(PlateauTest, StrictImprovementResetsCounter) {
  PlateauScheduler s(1e-3, 0.1, 3);
  EXPECT_TRUE(s.Step(1.0));
  EXPECT_FALSE(s.Step(1.0));  // equal is not an improvement
  EXPECT_FALSE(s.Step(2.0));
  EXPECT_EQ(s.epochs_since_improvement(), 2u);
  EXPECT_TRUE(s.Step(0.999));
  EXPECT_EQ(s.epochs_since_improvement(), 0u);
  EXPECT_EQ(s.lr(), 1e-3);
  for (int i = 0; i < 3; ++i) s.Step(5.0);
  EXPECT_DOUBLE_EQ(s.lr(), 1e-4);
  EXPECT_EQ(s.best(), 0.999);
}

TEST(PlateauTest, RateNeverIncreases) {
  const auto losses = testing::RandomVector(200, 4, 0, 1);
  PlateauScheduler s(1e-3, 0.5, 2);
  double prev = s.lr();
  for (double l : losses) {
    s.Step(l);
    EXPECT_LE(s.lr(), prev);
    prev = s.lr();
  }
}

TEST(AdamTest, FirstStepsMatchHandRecurrence) {
  Parameter p{"p", Tensor({2}), Tensor({2})};
  p.value[0] = 1.0, p.value[1] = -2.0;
  Adam adam({&p}, 0.9, 0.999, 1e-8);
  double m[2] = {0, 0}, v[2] = {0, 0}, x[2] = {1.0, -2.0};
  const double grads[3][2] = {{0.5, -1.5}, {0.1, 2.0}, {-0.3, 0.0}};
  for (int t = 1; t <= 3; ++t) {
    p.grad[0] = grads[t - 1][0], p.grad[1] = grads[t - 1][1];
    adam.Step(0.01);
    for (int i = 0; i < 2; ++i) {
      const double g = grads[t - 1][i];
      m[i] = 0.9 * m[i] + 0.1 * g;
      v[i] = 0.999 * v[i] + 0.001 * g * g;
      const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
      x[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
      EXPECT_NEAR(p.value[i], x[i], 1e-15) << t << " " << i;
    }
  }
  EXPECT_EQ(adam.steps(), 3u);
}

TEST(ClipTest, ScalesToMaxNorm) {
  Parameter a{"a", Tensor({2}), Tensor({2})}, b{"b", Tensor({1}), Tensor({1})};
  a.grad[0] = 3, a.grad[1] = 0, b.grad[0] = 4;
  EXPECT_DOUBLE_EQ(ClipGradNorm({&a, &b}, 1.0), 5.0);
  EXPECT_DOUBLE_EQ(a.grad[0], 0.6);
  EXPECT_DOUBLE_EQ(b.grad[0], 0.8);
  EXPECT_DOUBLE_EQ(ClipGradNorm({&a, &b}, 2.0), 1.0);  // below the limit: untouched
  EXPECT_DOUBLE_EQ(a.grad[0], 0.6);
}

TEST(TrainConfigTest, Validation) {
  TrainConfig c;
  EXPECT_NO_THROW(c.Validate());
  c.learning_rate = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.decay_factor = 1.0;
  EXPECT_THROW(c.Validate(), ConfigError);
  c = TrainConfig{};
  c.plateau_patience = 0;
  EXPECT_THROW(c.Validate(), ConfigError);
}

// ---------------------------------------------------------------------------
// End-to-end runs on a very small corpus and network.

ModelConfig TinyModel() {
  ModelConfig c;
  c.base_channels = 2;
  c.articulation_channels = {2, 2, 2};
  c.lstm_hidden = 8;
  c.video_height = 8;
  c.video_width = 16;
  return c;
}

struct Fixture {
  CorpusManifest manifest;
  std::vector<PreparedUtterance> train, valid;
  ModelConfig model = TinyModel();
  SpectralConfig spectral;
};

const Fixture &Data() {
  static const Fixture *f = [] {
    auto *fx = new Fixture;
    const auto dir = testing::ScratchDir("training_corpus");
    SynthCorpusOptions o;
    o.n_train = 4, o.n_valid = 2, o.n_test = 2, o.seed = 3;
    o.min_duration_s = 0.6, o.max_duration_s = 0.7;
    fx->manifest = WriteSyntheticCorpus(dir.string(), o);
    fx->train = PrepareSplit(fx->manifest, Split::kTrain, fx->spectral, fx->model, true);
    fx->valid = PrepareSplit(fx->manifest, Split::kValid, fx->spectral, fx->model, true);
    return fx;
  }();
  return *f;
}

TrainConfig QuickConfig(const std::string &name) {
  TrainConfig c;
  c.max_epochs = 2;
  c.batch_size = 2;
  c.checkpoint_path = (testing::ScratchDir(name) / "model.ckpt").string();
  return c;
}

TEST(TrainingTest, RunsAreBitIdentical) {
  const Fixture &d = Data();
  const TrainConfig a = QuickConfig("train_det_a"), b = QuickConfig("train_det_b");
  const TrainResult ra = TrainOnPrepared(ModelKind::kTeacher, d.train, d.valid, d.model, d.spectral, a, nullptr);
  const TrainResult rb = TrainOnPrepared(ModelKind::kTeacher, d.train, d.valid, d.model, d.spectral, b, nullptr);
  EXPECT_EQ(testing::ReadFileBytes(ra.checkpoint_path), testing::ReadFileBytes(rb.checkpoint_path));
  EXPECT_EQ(ra.best_valid_loss, rb.best_valid_loss);
  ASSERT_EQ(ra.history.size(), 3u);  // epoch 0 plus two
  EXPECT_EQ(ra.history[0].epoch, 0u);
  EXPECT_EQ(ra.history[0].train_total, 0.0);
  EXPECT_GT(ra.history[1].train_total, 0.0);
}

TEST(TrainingTest, LogHasOneValidationRowPerEpochAndTerm) {
  const Fixture &d = Data();
  TrainConfig c = QuickConfig("train_log");
  c.log_path = (testing::ScratchDir("train_log_file") / "log.tsv").string();
  TrainOnPrepared(ModelKind::kTeacher, d.train, d.valid, d.model, d.spectral, c, nullptr);
  std::ifstream in(c.log_path);
  std::string line;
  std::map<std::string, std::size_t> valid_rows;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch\tsplit\tloss_name\tvalue\tlr");
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string x; std::getline(ss, x, '\t');) f.push_back(x);
    ASSERT_EQ(f.size(), 5u) << line;
    if (f[1] == "valid") ++valid_rows[f[2]];
    EXPECT_TRUE(f[1] == "valid" || f[1] == "train") << line;
  }
  ASSERT_TRUE(valid_rows.count("stft"));
  for (const auto &[name, n] : valid_rows) EXPECT_EQ(n, 3u) << name;
}

TEST(TrainingTest, StudentWithZeroGammasMatchesNoTeacherRun) {
  const Fixture &d = Data();
  const TrainConfig tc = QuickConfig("kd_teacher");
  TrainOnPrepared(ModelKind::kTeacher, d.train, d.valid, d.model, d.spectral, tc, nullptr);
  LoadedModel teacher = LoadModel(tc.checkpoint_path);
  const std::uint64_t before = teacher.net.Checksum();

  TrainConfig with = QuickConfig("kd_zero_with"), without = QuickConfig("kd_zero_without");
  with.weights.gamma1 = with.weights.gamma2 = 0;
  without.weights.gamma1 = without.weights.gamma2 = 0;
  TrainOnPrepared(ModelKind::kStudent, d.train, d.valid, d.model, d.spectral, with, &teacher.net);
  TrainOnPrepared(ModelKind::kStudent, d.train, d.valid, d.model, d.spectral, without, nullptr);
  const Checkpoint a = LoadCheckpoint(with.checkpoint_path), b = LoadCheckpoint(without.checkpoint_path);
  ASSERT_EQ(a.tensors.size(), b.tensors.size());
  for (std::size_t i = 0; i < a.tensors.size(); ++i)
    EXPECT_EQ(a.tensors[i].value.values(), b.tensors[i].value.values()) << a.tensors[i].name;

  // Full distillation leaves the teacher untouched.
  TrainConfig kd = QuickConfig("kd_full");
  const TrainResult r = TrainOnPrepared(ModelKind::kStudent, d.train, d.valid, d.model, d.spectral, kd, &teacher.net);
  EXPECT_EQ(teacher.net.Checksum(), before);
  EXPECT_GT(r.history.back().train.kd_mse, 0.0);
  EXPECT_GT(r.history.back().train.spkd, 0.0);
}

TEST(TrainingTest, RejectsEmptySplitAndMismatchedTeacher) {
  const Fixture &d = Data();
  const TrainConfig c = QuickConfig("train_empty");
  EXPECT_THROW(TrainOnPrepared(ModelKind::kTeacher, {}, d.valid, d.model, d.spectral, c, nullptr),
               InvalidArgument);
  EXPECT_THROW(TrainOnPrepared(ModelKind::kTeacher, d.train, {}, d.model, d.spectral, c, nullptr),
               InvalidArgument);
  ModelConfig other = d.model;
  other.base_channels = 4;
  AvseNet teacher = BuildTeacher(other, 1);
  EXPECT_THROW(TrainOnPrepared(ModelKind::kStudent, d.train, d.valid, d.model, d.spectral, c, &teacher),
               Error);
}

TEST(TrainingTest, DivergenceIsReported) {
  const Fixture &d = Data();
  TrainConfig c = QuickConfig("train_diverge");
  c.learning_rate = 1e300;
  c.grad_clip = 0;
  c.max_epochs = 3;
  EXPECT_THROW(TrainOnPrepared(ModelKind::kTeacher, d.train, d.valid, d.model, d.spectral, c, nullptr),
               NumericError);
}

TEST(CheckpointRoundTripTest, ForwardOutputsUnchanged) {
  const Fixture &d = Data();
  AvseNet net = BuildTeacher(d.model, 9);
  // Move running statistics off their initial values.
  const Tensor audio = testing::RandomTensor({2, 2, 10, 257}, 1);
  const Tensor lips = testing::RandomTensor({2, 3, 10, 8, 16}, 2, 0, 1);
  const Tensor tongues = testing::RandomTensor({2, 3, 10, 8, 16}, 3, 0, 1);
  net.ForwardTensors(audio, lips, tongues, Mode::kTrain, nullptr);
  const auto path = (testing::ScratchDir("ckpt_round") / "m.ckpt").string();
  SaveCheckpoint(path, SnapshotModel(net, d.spectral));
  LoadedModel back = LoadModel(path);
  EXPECT_EQ(back.net.kind(), ModelKind::kTeacher);
  EXPECT_EQ(back.net.Checksum(), net.Checksum());
  EXPECT_EQ(back.net.ForwardTensors(audio, lips, tongues, Mode::kInference, nullptr).values(),
            net.ForwardTensors(audio, lips, tongues, Mode::kInference, nullptr).values());
  EXPECT_EQ(EncodeCheckpoint(back.checkpoint), testing::ReadFileBytes(path));
}

// ---------------------------------------------------------------------------
// Enhance.

VideoFrames Frames(std::size_t t, double fill) {
  VideoFrames v;
  v.num_frames = t, v.height = 64, v.width = 128;
  v.pixels.assign(t * 64 * 128, fill);
  return v;
}

TEST(EnhanceTest, ZerosInZerosOut) {
  const Fixture &d = Data();
  for (ModelKind kind : {ModelKind::kTeacher, ModelKind::kStudent}) {
    LoadedModel m = ModelFromCheckpoint(SnapshotModel(*std::make_unique<AvseNet>(kind, d.model, 4), d.spectral));
    const std::vector<double> zeros(16000, 0.0);
    const VideoFrames lip = Frames(82, 0.4), tongue = Frames(82, 0.6);
    const auto out = Enhance(m, zeros, lip, kind == ModelKind::kTeacher ? &tongue : nullptr);
    // 80 STFT frames against 82 video frames: (80 - 1) * hop + win.
    EXPECT_EQ(d.spectral.NumFrames(16000), 80u);
    EXPECT_EQ(out.size(), 79 * d.spectral.hop_length + d.spectral.win_length);
    for (double v : out) EXPECT_EQ(v, 0.0);
  }
}

TEST(EnhanceTest, ModalityContract) {
  const Fixture &d = Data();
  AvseNet student(ModelKind::kStudent, d.model, 1), teacher(ModelKind::kTeacher, d.model, 1);
  LoadedModel s = ModelFromCheckpoint(SnapshotModel(student, d.spectral));
  LoadedModel t = ModelFromCheckpoint(SnapshotModel(teacher, d.spectral));
  const auto noisy = testing::RandomVector(8000, 5, -0.3, 0.3);
  const VideoFrames lip = Frames(41, 0.4), tongue = Frames(41, 0.6);
  std::vector<std::string> warnings;
  const auto a = Enhance(s, noisy, lip, &tongue, &warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("tongue"), std::string::npos);
  EXPECT_EQ(a, Enhance(s, noisy, lip, nullptr));
  EXPECT_THROW(Enhance(t, noisy, lip, nullptr), InvalidArgument);
  // Video shorter than the audio truncates the output: 20 frames.
  const auto b = Enhance(s, noisy, Frames(20, 0.4), nullptr);
  EXPECT_EQ(b.size(), 19 * d.spectral.hop_length + d.spectral.win_length);
}

TEST(EnhanceTest, OracleMaskCeilingAtMinus7p5Db) {
  const Fixture &d = Data();
  for (const auto *rec : d.manifest.BySplit(Split::kTest)) {
    PrepareOptions po;
    po.snr_override = -7.5;
    po.load_tongue = false;
    const PreparedUtterance u = PrepareUtterance(d.manifest, *rec, d.spectral, po);
    const auto est = OracleEnhance(u.clean, u.noisy, d.spectral);
    const std::span<const double> ref(u.clean.data(), est.size());
    EXPECT_GE(SegSnr(ref, est), 30.0) << rec->utt_id;
  }
}

}  // namespace
}  // namespace avse
