// core/src/training.cc

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

#include "avse/training.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "avse/error.h"
#include "avse/random.h"

namespace avse {
namespace {

std::string Num(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

double Objective(const LossTerms &t, const EffectiveWeights &w, bool kd) {
  double total = t.mask + w.alpha * t.stft;
  if (kd) total += w.gamma1 * t.kd_mse + w.gamma2 * t.spkd;
  return total;
}

void AddTerms(LossTerms *acc, const LossTerms &t, double scale) {
  acc->mask += scale * t.mask;
  acc->stft += scale * t.stft;
  acc->kd_mse += scale * t.kd_mse;
  acc->spkd += scale * t.spkd;
}

class TrainLog {
 public:
  explicit TrainLog(const std::string &path) {
    if (path.empty()) return;
    out_.open(path, std::ios::trunc);
    if (!out_) throw IoError("cannot open training log '" + path + "'");
    out_ << "epoch\tsplit\tloss_name\tvalue\tlr\n";
  }
  void Rows(std::size_t epoch, const char *split, const LossTerms &t, double total, double lr,
            bool kd) {
    if (!out_.is_open()) return;
    Row(epoch, split, "total", total, lr);
    Row(epoch, split, "mask", t.mask, lr);
    Row(epoch, split, "stft", t.stft, lr);
    if (kd) {
      Row(epoch, split, "kd_mse", t.kd_mse, lr);
      Row(epoch, split, "spkd", t.spkd, lr);
    }
    out_.flush();
  }

 private:
  void Row(std::size_t epoch, const char *split, const char *name, double v, double lr) {
    out_ << epoch << '\t' << split << '\t' << name << '\t' << Num(v) << '\t' << Num(lr) << '\n';
  }
  std::ofstream out_;
};

struct BatchLoss {
  LossTerms terms;
  // d/d mask of the mask term and of the spectrogram term.
  Tensor grad_mask, grad_stft;
};

// Mask and spectrogram terms for every item of a forward pass, averaged
// over the batch, and the matching gradient w.r.t. the mask tensor.
BatchLoss MaskLosses(const Tensor &mask, const std::vector<ComplexSpectrogram> &noisy,
                     const std::vector<ComplexSpectrogram> &clean,
                     const std::vector<ComplexMask> &targets, double bound, bool want_grad) {
  BatchLoss out;
  const std::size_t b = noisy.size();
  const std::size_t plane = mask.dim(2) * mask.dim(3);
  if (want_grad) {
    out.grad_mask = Tensor(mask.shape());
    out.grad_stft = Tensor(mask.shape());
  }
  for (std::size_t n = 0; n < b; ++n) {
    const ComplexMask m = MaskFromTensor(mask, n, bound);
    const ComplexSpectrogram enhanced = ApplyMask(noisy[n], m);
    ComplexMask gm;
    ComplexSpectrogram gs;
    out.terms.mask += LossMask(m, targets[n], want_grad ? &gm : nullptr) / static_cast<double>(b);
    out.terms.stft += LossStft(enhanced, clean[n], want_grad ? &gs : nullptr) / static_cast<double>(b);
    if (!want_grad) continue;
    const ComplexMask gstft = EnhancedGradToMask(gs, noisy[n]);
    double *mr = out.grad_mask.data() + 2 * n * plane, *mi = mr + plane;
    double *sr = out.grad_stft.data() + 2 * n * plane, *si = sr + plane;
    for (std::size_t i = 0; i < plane; ++i) {
      mr[i] = gm.real[i] / static_cast<double>(b);
      mi[i] = gm.imag[i] / static_cast<double>(b);
      sr[i] = gstft.real[i] / static_cast<double>(b);
      si[i] = gstft.imag[i] / static_cast<double>(b);
    }
  }
  return out;
}

TrainingBatch SingleItem(const PreparedUtterance &u, const SpectralConfig &spectral,
                         const MaskTarget &target) {
  const PreparedUtterance *ptr = &u;
  return AssembleBatch(std::span<const PreparedUtterance *const>(&ptr, 1), 0, spectral, target);
}

}  // namespace

void TrainConfig::Validate() const {
  if (!(learning_rate > 0)) throw ConfigError("train.learning_rate must be > 0");
  if (!(decay_factor > 0 && decay_factor < 1))
    throw ConfigError("train.decay_factor must lie in (0, 1)");
  if (plateau_patience < 1) throw ConfigError("train.plateau_patience must be >= 1");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(beta1 >= 0 && beta1 < 1) || !(beta2 >= 0 && beta2 < 1) || !(adam_eps > 0))
    throw ConfigError("Adam constants out of range");
  if (!(grad_clip >= 0)) throw ConfigError("train.grad_clip must be >= 0");
  if (!(mask_epsilon > 0)) throw ConfigError("train.mask_epsilon must be > 0");
  weights.Validate();
}

PlateauScheduler::PlateauScheduler(double lr, double factor, std::size_t patience)
    : lr_(lr), factor_(factor), patience_(patience), best_(std::numeric_limits<double>::infinity()) {}

bool PlateauScheduler::Step(double valid_loss) {
  if (valid_loss < best_) {
    best_ = valid_loss;
    since_ = 0;
    return true;
  }
  if (++since_ >= patience_) {
    lr_ *= factor_;
    since_ = 0;
  }
  return false;
}

Adam::Adam(std::vector<Parameter *> params, double beta1, double beta2, double eps)
    : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
  for (Parameter *p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

void Adam::Step(double lr) {
  ++t_;
  const double c1 = 1 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    Parameter &p = *params_[k];
    Tensor &m = m_[k], &v = v_[k];
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = beta1_ * m[i] + (1 - beta1_) * g;
      v[i] = beta2_ * v[i] + (1 - beta2_) * g * g;
      p.value[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps_);
    }
  }
}

double ClipGradNorm(const std::vector<Parameter *> &params, double max_norm) {
  double sq = 0.0;
  for (const Parameter *p : params)
    for (double g : p->grad.values()) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Parameter *p : params)
      for (double &g : p->grad.values()) g *= scale;
  }
  return norm;
}

std::vector<PreparedUtterance> PrepareSplit(const CorpusManifest &manifest, Split split,
                                            const SpectralConfig &spectral,
                                            const ModelConfig &model, bool load_tongue) {
  PrepareOptions options;
  options.load_tongue = load_tongue;
  options.video_height = model.video_height;
  options.video_width = model.video_width;
  std::vector<PreparedUtterance> out;
  for (const UtteranceRecord *r : manifest.BySplit(split))
    out.push_back(PrepareUtterance(manifest, *r, spectral, options));
  return out;
}

LossTerms EvaluateLosses(AvseNet &net, const std::vector<PreparedUtterance> &utts,
                         const SpectralConfig &spectral, double mask_epsilon, AvseNet *teacher) {
  if (utts.empty()) throw InvalidArgument("cannot evaluate on an empty split");
  const MaskTarget target{mask_epsilon, net.config().mask_bound};
  const bool teacher_net = net.kind() == ModelKind::kTeacher;
  LossTerms mean;
  for (const PreparedUtterance &u : utts) {
    const TrainingBatch batch = SingleItem(u, spectral, target);
    const Tensor audio = SpectrogramBatch(batch.noisy);
    const Tensor lips = ArticulationBatch(batch.lips);
    const bool need_tongue = teacher_net || teacher;
    const Tensor tongues = need_tongue ? ArticulationBatch(batch.tongues) : Tensor();
    FeatureTrace trace_s, trace_t;
    const Tensor mask = net.ForwardTensors(audio, lips, tongues, Mode::kInference,
                                           teacher ? &trace_s : nullptr);
    BatchLoss loss = MaskLosses(mask, batch.noisy, batch.clean, batch.ideal_masks,
                                net.config().mask_bound, false);
    if (teacher) {
      teacher->ForwardTensors(audio, lips, tongues, Mode::kInference, &trace_t);
      loss.terms.kd_mse = LossKdMse(trace_t, trace_s);
      loss.terms.spkd = LossSpkd(trace_t, trace_s);
    }
    AddTerms(&mean, loss.terms, 1.0 / static_cast<double>(utts.size()));
  }
  return mean;
}

TrainResult TrainOnPrepared(ModelKind kind, const std::vector<PreparedUtterance> &train,
                            const std::vector<PreparedUtterance> &valid, const ModelConfig &model,
                            const SpectralConfig &spectral, const TrainConfig &config,
                            AvseNet *teacher) {
  config.Validate();
  if (train.empty()) throw InvalidArgument("training split is empty");
  if (valid.empty()) throw InvalidArgument("validation split is empty");
  if (teacher && teacher->kind() != ModelKind::kTeacher)
    throw InvalidArgument("distillation source must be a teacher checkpoint");

  AvseNet net(kind, model, config.seed);
  const bool kd = teacher && kind == ModelKind::kStudent &&
                  (config.weights.gamma1 > 0 || config.weights.gamma2 > 0);
  const MaskTarget target{config.mask_epsilon, model.mask_bound};

  if (kd) {
    // Trace layouts must agree before any update happens.
    const TrainingBatch probe = SingleItem(valid.front(), spectral, target);
    if (probe.tongues.empty()) throw InvalidArgument("distillation needs tongue video");
    FeatureTrace ts, tt;
    const Tensor audio = SpectrogramBatch(probe.noisy);
    const Tensor lips = ArticulationBatch(probe.lips);
    net.ForwardTensors(audio, lips, Tensor(), Mode::kInference, &ts);
    teacher->ForwardTensors(audio, lips, ArticulationBatch(probe.tongues), Mode::kInference, &tt);
    CheckTracesAligned(tt, ts);
  }

  std::vector<Parameter *> params = net.Parameters();
  Adam adam(params, config.beta1, config.beta2, config.adam_eps);
  PlateauScheduler scheduler(config.learning_rate, config.decay_factor, config.plateau_patience);
  LossBalancer balancer;
  const LossBalancer *balance = config.weights.auto_balance ? &balancer : nullptr;
  TrainLog log(config.log_path);
  TrainResult result;
  result.checkpoint_path = config.checkpoint_path;
  Checkpoint best;

  {
    EpochRecord rec;
    rec.lr = scheduler.lr();
    rec.valid = EvaluateLosses(net, valid, spectral, config.mask_epsilon, kd ? teacher : nullptr);
    rec.valid_total = Objective(rec.valid, ResolveWeights(config.weights, balance), kd);
    log.Rows(0, "valid", rec.valid, rec.valid_total, rec.lr, kd);
    result.history.push_back(rec);
  }

  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle = MakeRng(config.seed, streams::kShuffle, epoch);
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[UniformIndex(shuffle, i)]);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = scheduler.lr();
    std::size_t num_batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++num_batches) {
      std::vector<const PreparedUtterance *> items;
      for (std::size_t i = start; i < std::min(order.size(), start + config.batch_size); ++i)
        items.push_back(&train[order[i]]);
      const TrainingBatch batch =
          AssembleBatch(items, DeriveSeed(config.seed, streams::kBatchCrop, (epoch << 20) + num_batches),
                        spectral, target);
      const Tensor audio = SpectrogramBatch(batch.noisy);
      const Tensor lips = ArticulationBatch(batch.lips);
      const bool need_tongue = kind == ModelKind::kTeacher || kd;
      const Tensor tongues = need_tongue ? ArticulationBatch(batch.tongues) : Tensor();

      net.ZeroGrad();
      FeatureTrace trace_s, trace_t;
      const Tensor mask =
          net.ForwardTensors(audio, lips, tongues, Mode::kTrain, kd ? &trace_s : nullptr);
      BatchLoss loss = MaskLosses(mask, batch.noisy, batch.clean, batch.ideal_masks,
                                  model.mask_bound, true);
      LossTerms terms = loss.terms;
      std::vector<Tensor> grad_kd, grad_spkd;
      if (kd) {
        teacher->ForwardTensors(audio, lips, tongues, Mode::kInference, &trace_t);
        terms.kd_mse = LossKdMse(trace_t, trace_s, &grad_kd, config.weights.kd_per_item);
        terms.spkd = LossSpkd(trace_t, trace_s, &grad_spkd);
      }
      if (balance) balancer.Observe(terms);
      const EffectiveWeights w = ResolveWeights(config.weights, balance);
      const double total = Objective(terms, w, kd);
      if (!std::isfinite(total))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(num_batches));

      Tensor &grad = loss.grad_mask;
      for (std::size_t i = 0; i < grad.size(); ++i) grad[i] += w.alpha * loss.grad_stft[i];
      if (kd) {
        std::vector<Tensor> trace_grads(trace_s.size());
        for (std::size_t l = 0; l < trace_s.size(); ++l) {
          Tensor g(trace_s.features[l].shape());
          for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = w.gamma1 * grad_kd[l][i] + w.gamma2 * grad_spkd[l][i];
          trace_grads[l] = std::move(g);
        }
        net.Backward(grad, &trace_grads);
      } else {
        net.Backward(grad);
      }
      if (config.grad_clip > 0) ClipGradNorm(params, config.grad_clip);
      adam.Step(scheduler.lr());

      AddTerms(&rec.train, terms, 1.0);
      rec.train_total += total;
    }
    const double inv = 1.0 / static_cast<double>(num_batches);
    LossTerms scaled;
    AddTerms(&scaled, rec.train, inv);
    rec.train = scaled;
    rec.train_total *= inv;

    rec.valid = EvaluateLosses(net, valid, spectral, config.mask_epsilon, kd ? teacher : nullptr);
    rec.valid_total = Objective(rec.valid, ResolveWeights(config.weights, balance), kd);
    log.Rows(epoch, "train", rec.train, rec.train_total, rec.lr, kd);
    log.Rows(epoch, "valid", rec.valid, rec.valid_total, rec.lr, kd);
    result.history.push_back(rec);

    if (scheduler.Step(rec.valid_total)) {
      result.best_epoch = epoch;
      result.best_valid_loss = rec.valid_total;
      result.best_valid = rec.valid;
      best = SnapshotModel(net, spectral,
                           {{"train.best_epoch", std::to_string(epoch)},
                            {"train.best_valid_loss", Num(rec.valid_total)}});
    }
  }

  if (best.tensors.empty()) {
    // No epoch ran; keep the initial weights.
    result.best_valid_loss = result.history.front().valid_total;
    result.best_valid = result.history.front().valid;
    best = SnapshotModel(net, spectral, {{"train.best_epoch", "0"},
                                         {"train.best_valid_loss", Num(result.best_valid_loss)}});
  }
  SaveCheckpoint(config.checkpoint_path, best);
  return result;
}

TrainResult TrainTeacher(const CorpusManifest &manifest, const ModelConfig &model,
                         const SpectralConfig &spectral, const TrainConfig &config) {
  const auto train = PrepareSplit(manifest, Split::kTrain, spectral, model, true);
  const auto valid = PrepareSplit(manifest, Split::kValid, spectral, model, true);
  return TrainOnPrepared(ModelKind::kTeacher, train, valid, model, spectral, config, nullptr);
}

TrainResult TrainStudent(const CorpusManifest &manifest, const ModelConfig &model,
                         const SpectralConfig &spectral, const TrainConfig &config,
                         const std::string &teacher_checkpoint) {
  LoadedModel teacher = LoadModel(teacher_checkpoint);
  if (teacher.net.kind() != ModelKind::kTeacher)
    throw InvalidArgument("'" + teacher_checkpoint + "' is not a teacher checkpoint");
  if (teacher.spectral.hop_length != spectral.hop_length ||
      teacher.spectral.fft_size != spectral.fft_size ||
      teacher.spectral.win_length != spectral.win_length)
    throw InvalidArgument("teacher checkpoint was trained with a different STFT setup");
  const auto train = PrepareSplit(manifest, Split::kTrain, spectral, model, true);
  const auto valid = PrepareSplit(manifest, Split::kValid, spectral, model, true);
  return TrainOnPrepared(ModelKind::kStudent, train, valid, model, spectral, config,
                         &teacher.net);
}

std::vector<double> EnhanceSequences(LoadedModel &model, const ComplexSpectrogram &noisy,
                                     const ArticulationSequence &lip,
                                     const ArticulationSequence *tongue,
                                     std::vector<std::string> *warnings) {
  AvseNet &net = model.net;
  const bool teacher = net.kind() == ModelKind::kTeacher;
  if (teacher && !tongue) throw InvalidArgument("teacher checkpoint needs a tongue video");
  if (!teacher && tongue && warnings)
    warnings->push_back("student checkpoint ignores the tongue video");
  std::size_t frames = std::min(noisy.num_frames, lip.num_frames);
  if (teacher) frames = std::min(frames, tongue->num_frames);
  if (frames == 0) throw InvalidArgument("no aligned frames between audio and video");

  const std::vector<ComplexSpectrogram> noisy_b{noisy.CropFrames(0, frames)};
  const std::vector<ArticulationSequence> lip_b{lip.CropFrames(0, frames)};
  NetworkOutput out;
  if (teacher) {
    const std::vector<ArticulationSequence> tongue_b{tongue->CropFrames(0, frames)};
    out = TeacherForward(net, noisy_b, lip_b, tongue_b, Mode::kInference);
  } else {
    out = StudentForward(net, noisy_b, lip_b, Mode::kInference);
  }
  return Istft(out.enhanced.front());
}

std::vector<double> Enhance(LoadedModel &model, const std::vector<double> &noisy,
                            const VideoFrames &lip, const VideoFrames *tongue,
                            std::vector<std::string> *warnings) {
  const ModelConfig &mc = model.net.config();
  const bool teacher = model.net.kind() == ModelKind::kTeacher;
  if (teacher && !tongue) throw InvalidArgument("teacher checkpoint needs a tongue video");
  const ComplexSpectrogram spec = Stft(noisy, model.spectral);
  const ArticulationSequence lips =
      ArticulationPreprocess(lip, Modality::kLip, mc.video_height, mc.video_width);
  if (!teacher) {
    if (tongue && warnings) warnings->push_back("student checkpoint ignores the tongue video");
    return EnhanceSequences(model, spec, lips, nullptr, nullptr);
  }
  const ArticulationSequence tongues =
      ArticulationPreprocess(*tongue, Modality::kTongue, mc.video_height, mc.video_width);
  return EnhanceSequences(model, spec, lips, &tongues, warnings);
}

std::vector<double> OracleEnhance(const std::vector<double> &clean,
                                  const std::vector<double> &noisy,
                                  const SpectralConfig &spectral) {
  const ComplexSpectrogram s = Stft(clean, spectral);
  const ComplexSpectrogram y = Stft(noisy, spectral);
  const ComplexMask m =
      IdealComplexMask(s, y, kDefaultMaskEpsilon, std::numeric_limits<double>::infinity());
  return Istft(ApplyMask(y, m));
}

}  // namespace avse
