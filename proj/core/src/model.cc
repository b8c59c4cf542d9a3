// core/src/model.cc

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

#include "avse/model.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <set>
#include <sstream>

#include "avse/error.h"
#include "avse/random.h"

namespace avse {

// Layers run in order; activations are checked for NaN/Inf after the last
// one so errors name the block rather than the whole network.
class Sequential {
 public:
  explicit Sequential(std::string name) : name_(std::move(name)) {}

  template <class L, class... Args>
  L *Add(Args &&...args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L *raw = layer.get();
    layers_.push_back(std::move(layer));
    return raw;
  }

  Tensor Forward(const Tensor &x, Mode mode) {
    Tensor h = layers_.front()->Forward(x, mode);
    for (std::size_t i = 1; i < layers_.size(); ++i) h = layers_[i]->Forward(h, mode);
    if (!AllFinite(h)) throw NumericError("non-finite activations after " + name_);
    return h;
  }

  Tensor Backward(const Tensor &dy) {
    Tensor g = layers_.back()->Backward(dy);
    for (std::size_t i = layers_.size() - 1; i-- > 0;) g = layers_[i]->Backward(g);
    return g;
  }

  void CollectParameters(std::vector<Parameter *> *out) {
    for (auto &l : layers_) l->CollectParameters(out);
  }
  void CollectBuffers(std::vector<Buffer> *out) {
    for (auto &l : layers_) l->CollectBuffers(out);
  }

  const std::string &name() const { return name_; }

 private:
  std::string name_;
  std::vector<std::unique_ptr<Layer>> layers_;
};

namespace {

std::size_t Halve(std::size_t f) { return (f - 1) / 2 + 1; }

std::string JoinList(const std::vector<std::size_t> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(v[i]);
  }
  return out;
}

std::string JoinNames(const std::vector<std::string> &v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    out += v[i];
  }
  return out;
}

std::vector<std::string> SplitComma(const std::string &s) {
  std::vector<std::string> out;
  if (s.empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(item);
  return out;
}

std::size_t ParseSize(const std::string &key, const std::string &value) {
  std::size_t v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ConfigError(key + ": expected a non-negative integer, got '" + value + "'");
  return v;
}

double ParseDouble(const std::string &key, const std::string &value) {
  double v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ConfigError(key + ": expected a number, got '" + value + "'");
  return v;
}

std::string FormatDouble(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

}  // namespace

std::string_view ModelKindName(ModelKind kind) {
  return kind == ModelKind::kTeacher ? "teacher" : "student";
}

ModelKind ParseModelKind(std::string_view name) {
  if (name == "teacher") return ModelKind::kTeacher;
  if (name == "student") return ModelKind::kStudent;
  throw ConfigError("unknown model kind '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

void ModelConfig::Validate() const {
  if (base_channels == 0) throw ConfigError("model.base_channels must be positive");
  if (articulation_channels.empty())
    throw ConfigError("model.articulation_channels must list at least one width");
  for (std::size_t c : articulation_channels)
    if (c == 0) throw ConfigError("model.articulation_channels entries must be positive");
  if (n_feature_blocks == 0) throw ConfigError("model.n_feature_blocks must be positive");
  if (lstm_layers == 0) throw ConfigError("model.lstm_layers must be positive");
  if (lstm_hidden == 0) throw ConfigError("model.lstm_hidden must be positive");
  if (!(mask_bound > 0) || !std::isfinite(mask_bound))
    throw ConfigError("model.mask_bound must be positive and finite");
  if (!(leaky_slope >= 0) || !(leaky_slope < 1))
    throw ConfigError("model.leaky_slope must lie in [0, 1)");
  if (freq_bins < 2) throw ConfigError("model.freq_bins must be at least 2");
  if (video_height == 0 || video_width == 0)
    throw ConfigError("video height and width must be positive");
  const std::vector<std::string> all = CaptureTracePoints(*this);
  std::set<std::string> seen;
  for (const auto &name : trace_points) {
    if (std::find(all.begin(), all.end(), name) == all.end())
      throw ConfigError("unknown trace point '" + name + "'");
    if (!seen.insert(name).second) throw ConfigError("duplicate trace point '" + name + "'");
  }
}

bool ModelConfig::IsCanonical() const { return n_feature_blocks == 7 && lstm_layers == 2; }

std::vector<std::string> ModelConfig::ResolvedTracePoints() const {
  return trace_points.empty() ? CaptureTracePoints(*this) : trace_points;
}

std::size_t ModelConfig::AudioFreq(std::size_t level) const {
  std::size_t f = Halve(Halve(freq_bins));
  for (std::size_t k = 0; k < level; ++k) f = (f + 1) / 2;
  return f;
}

std::size_t ModelConfig::AudioChannels(std::size_t level) const {
  std::size_t mult = std::size_t{1} << std::min<std::size_t>(level / 2, 3);
  return base_channels * mult;
}

std::size_t ModelConfig::ArticulationFreq(std::size_t level) const {
  std::size_t h = video_height, w = video_width;
  for (std::size_t i = 0; i < articulation_channels.size(); ++i) {
    h = Halve(h);
    w = Halve(w);
  }
  std::size_t f = h * w;
  for (std::size_t k = 0; k < level; ++k) f = (f + 1) / 2;
  return f;
}

std::vector<std::string> CaptureTracePoints(const ModelConfig &config) {
  std::vector<std::string> names;
  for (std::size_t k = 0; k <= config.n_feature_blocks; ++k)
    names.push_back("encoder." + std::to_string(k));
  for (std::size_t k = 0; k < config.lstm_layers; ++k)
    names.push_back("lstm." + std::to_string(k));
  for (std::size_t k = 0; k <= config.n_feature_blocks; ++k)
    names.push_back("decoder." + std::to_string(k));
  return names;
}

std::vector<std::pair<std::string, std::string>> ModelConfigToKeyValues(
    const ModelConfig &c) {
  return {
      {"model.base_channels", std::to_string(c.base_channels)},
      {"model.articulation_channels", JoinList(c.articulation_channels)},
      {"model.n_feature_blocks", std::to_string(c.n_feature_blocks)},
      {"model.lstm_layers", std::to_string(c.lstm_layers)},
      {"model.lstm_hidden", std::to_string(c.lstm_hidden)},
      {"model.mask_bound", FormatDouble(c.mask_bound)},
      {"model.leaky_slope", FormatDouble(c.leaky_slope)},
      {"model.trace_points", JoinNames(c.trace_points)},
      {"model.freq_bins", std::to_string(c.freq_bins)},
      {"model.video_height", std::to_string(c.video_height)},
      {"model.video_width", std::to_string(c.video_width)},
  };
}

ModelConfig ModelConfigFromKeyValues(const std::map<std::string, std::string> &values) {
  ModelConfig c;
  auto get = [&](const char *key) -> const std::string * {
    auto it = values.find(key);
    return it == values.end() ? nullptr : &it->second;
  };
  if (auto v = get("model.base_channels")) c.base_channels = ParseSize("model.base_channels", *v);
  if (auto v = get("model.articulation_channels")) {
    c.articulation_channels.clear();
    for (const auto &item : SplitComma(*v))
      c.articulation_channels.push_back(ParseSize("model.articulation_channels", item));
  }
  if (auto v = get("model.n_feature_blocks"))
    c.n_feature_blocks = ParseSize("model.n_feature_blocks", *v);
  if (auto v = get("model.lstm_layers")) c.lstm_layers = ParseSize("model.lstm_layers", *v);
  if (auto v = get("model.lstm_hidden")) c.lstm_hidden = ParseSize("model.lstm_hidden", *v);
  if (auto v = get("model.mask_bound")) c.mask_bound = ParseDouble("model.mask_bound", *v);
  if (auto v = get("model.leaky_slope")) c.leaky_slope = ParseDouble("model.leaky_slope", *v);
  if (auto v = get("model.trace_points")) c.trace_points = SplitComma(*v);
  if (auto v = get("model.freq_bins")) c.freq_bins = ParseSize("model.freq_bins", *v);
  if (auto v = get("model.video_height")) c.video_height = ParseSize("model.video_height", *v);
  if (auto v = get("model.video_width")) c.video_width = ParseSize("model.video_width", *v);
  return c;
}

const Tensor *FeatureTrace::Find(const std::string &name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return &features[i];
  return nullptr;
}

// ---------------------------------------------------------------------------

Tensor SpectrogramBatch(std::span<const ComplexSpectrogram> specs) {
  if (specs.empty()) throw InvalidArgument("empty spectrogram batch");
  const std::size_t f = specs[0].num_bins, t = specs[0].num_frames;
  Tensor out({specs.size(), 2, t, f});
  for (std::size_t n = 0; n < specs.size(); ++n) {
    if (specs[n].num_bins != f || specs[n].num_frames != t)
      throw ShapeError("spectrogram batch items differ in size");
    std::copy(specs[n].real.begin(), specs[n].real.end(), out.data() + (2 * n) * t * f);
    std::copy(specs[n].imag.begin(), specs[n].imag.end(), out.data() + (2 * n + 1) * t * f);
  }
  return out;
}

Tensor ArticulationBatch(std::span<const ArticulationSequence> seqs) {
  if (seqs.empty()) throw InvalidArgument("empty articulation batch");
  const std::size_t t = seqs[0].num_frames, h = seqs[0].height, w = seqs[0].width;
  const std::size_t frame = h * w;
  Tensor out({seqs.size(), 3, t, h, w});
  for (std::size_t n = 0; n < seqs.size(); ++n) {
    const auto &s = seqs[n];
    if (s.num_frames != t || s.height != h || s.width != w)
      throw ShapeError("articulation batch items differ in size");
    double *raw = out.data() + (3 * n) * t * frame;
    std::copy(s.raw.begin(), s.raw.end(), raw);
    double *mean = out.data() + (3 * n + 1) * t * frame;
    double *sd = out.data() + (3 * n + 2) * t * frame;
    for (std::size_t k = 0; k < t; ++k) {
      std::copy(s.mean.begin(), s.mean.end(), mean + k * frame);
      std::copy(s.stddev.begin(), s.stddev.end(), sd + k * frame);
    }
  }
  return out;
}

ComplexMask MaskFromTensor(const Tensor &t, std::size_t n, double bound) {
  const std::size_t frames = t.dim(2), bins = t.dim(3), plane = frames * bins;
  ComplexMask m(bins, frames, bound);
  std::copy_n(t.data() + (2 * n) * plane, plane, m.real.begin());
  std::copy_n(t.data() + (2 * n + 1) * plane, plane, m.imag.begin());
  return m;
}

// ---------------------------------------------------------------------------

AvseNet::AvseNet(ModelKind kind, const ModelConfig &config, std::uint64_t seed)
    : kind_(kind), config_(config) {
  config_.Validate();
  trace_points_ = config_.ResolvedTracePoints();
  Build(seed);
}

AvseNet::~AvseNet() = default;
AvseNet::AvseNet(AvseNet &&) noexcept = default;
AvseNet &AvseNet::operator=(AvseNet &&) noexcept = default;

void AvseNet::Build(std::uint64_t seed) {
  const ModelConfig &c = config_;
  const std::size_t n = c.n_feature_blocks;
  const double slope = c.leaky_slope;
  std::uint64_t counter = 0;
  // Seeds follow parameter registration order, so the checksum depends only
  // on (config, seed).
  auto init = [&](auto *layer, std::size_t fan_in) {
    std::vector<Parameter *> params;
    layer->CollectParameters(&params);
    for (Parameter *p : params) InitUniformFanIn(p, fan_in, DeriveSeed(seed, streams::kInit, counter++));
  };
  auto conv_bn = [&](Sequential *s, const std::string &name, std::size_t in, std::size_t out,
                     std::size_t stride, bool propagate) {
    init(s->Add<Conv2d>(name + ".conv", in, out, stride, false, propagate), in * 9);
    s->Add<BatchNorm>(name + ".bn", out);
    s->Add<LeakyRelu>(slope);
  };

  const std::size_t a0 = c.AudioChannels(0);
  audio_in_ = std::make_unique<Sequential>("audio.in");
  conv_bn(audio_in_.get(), "audio.in.0", 2, a0, 2, false);
  conv_bn(audio_in_.get(), "audio.in.1", a0, a0, 2, true);
  for (std::size_t k = 1; k <= n; ++k) {
    auto block = std::make_unique<Sequential>("audio.block" + std::to_string(k));
    conv_bn(block.get(), block->name(), c.AudioChannels(k - 1), c.AudioChannels(k), 1, true);
    block->Add<FreqAvgPool>();
    audio_blocks_.push_back(std::move(block));
  }

  const std::size_t streams = kind_ == ModelKind::kTeacher ? 2 : 1;
  const std::size_t width = c.articulation_channels.back();
  art_.resize(streams);
  for (std::size_t s = 0; s < streams; ++s) {
    const std::string prefix = s == 0 ? "lip" : "tongue";
    auto front = std::make_unique<Sequential>(prefix + ".in");
    std::size_t in = 3;
    for (std::size_t i = 0; i < c.articulation_channels.size(); ++i) {
      const std::size_t out = c.articulation_channels[i];
      const std::string name = prefix + ".in." + std::to_string(i);
      init(front->Add<Conv3d>(name + ".conv", in, out, i > 0), in * 27);
      front->Add<BatchNorm>(name + ".bn", out);
      front->Add<LeakyRelu>(slope);
      in = out;
    }
    art_[s].push_back(std::move(front));
    for (std::size_t k = 1; k <= n; ++k) {
      auto block = std::make_unique<Sequential>(prefix + ".block" + std::to_string(k));
      conv_bn(block.get(), block->name(), width, width, 1, true);
      block->Add<FreqAvgPool>();
      art_[s].push_back(std::move(block));
    }
  }

  for (std::size_t k = 0; k <= n; ++k) {
    const std::string lvl = std::to_string(k);
    fusion_.push_back(std::make_unique<PointwiseLinear>("fusion" + lvl, streams * width, width));
    init(fusion_.back().get(), streams * width);
    project_.push_back(
        std::make_unique<PointwiseLinear>("project" + lvl, width, c.AudioChannels(k)));
    init(project_.back().get(), width);
  }

  std::size_t lstm_in = 2 * c.AudioChannels(n) * c.AudioFreq(n);
  for (std::size_t l = 0; l < c.lstm_layers; ++l) {
    lstm_.push_back(std::make_unique<Lstm>("lstm" + std::to_string(l), lstm_in, c.lstm_hidden));
    init(lstm_.back().get(), c.lstm_hidden);
    lstm_in = c.lstm_hidden;
  }

  auto tconv_bn = [&](Sequential *s, const std::string &name, std::size_t in, std::size_t out,
                      std::size_t stride, std::size_t out_freq) {
    auto *t = s->Add<ConvTranspose2d>(name + ".tconv", in, out, stride);
    t->SetOutputFreq(out_freq);
    init(t, in * 9);
    s->Add<BatchNorm>(name + ".bn", out);
    s->Add<LeakyRelu>(slope);
  };
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t k = n - j;
    const std::size_t in = j == 0 ? c.lstm_hidden + 2 * c.AudioChannels(k) : 3 * c.AudioChannels(k);
    auto layer = std::make_unique<Sequential>("decoder." + std::to_string(j));
    tconv_bn(layer.get(), layer->name(), in, c.AudioChannels(k - 1), 1, c.AudioFreq(k));
    layer->Add<FreqUpsample>()->SetTarget(c.AudioFreq(k - 1));
    decoder_.push_back(std::move(layer));
  }
  {
    auto layer = std::make_unique<Sequential>("decoder." + std::to_string(n));
    tconv_bn(layer.get(), layer->name() + ".0", 3 * a0, a0, 2, Halve(c.freq_bins));
    tconv_bn(layer.get(), layer->name() + ".1", a0, a0, 2, c.freq_bins);
    decoder_.push_back(std::move(layer));
  }
  head_ = std::make_unique<PointwiseLinear>("head", a0, 2);
  init(head_.get(), a0);
  head_act_ = std::make_unique<ScaledTanh>(c.mask_bound);
}

Tensor AvseNet::ForwardTensors(const Tensor &audio, const Tensor &lips, const Tensor &tongues,
                               Mode mode, FeatureTrace *trace) {
  const ModelConfig &c = config_;
  const std::size_t n = c.n_feature_blocks;
  const bool teacher = kind_ == ModelKind::kTeacher;
  if (audio.rank() != 4 || audio.dim(1) != 2 || audio.dim(3) != c.freq_bins)
    throw ShapeError("audio input must be b x 2 x t x " + std::to_string(c.freq_bins) +
                     ", got " + ShapeString(audio.shape()));
  const std::size_t b = audio.dim(0), frames = audio.dim(2);
  auto check_video = [&](const Tensor &v, const char *what) {
    if (v.rank() != 5 || v.dim(0) != b || v.dim(1) != 3 || v.dim(3) != c.video_height ||
        v.dim(4) != c.video_width)
      throw ShapeError(std::string(what) + " input must be b x 3 x t x " +
                       std::to_string(c.video_height) + " x " + std::to_string(c.video_width) +
                       ", got " + ShapeString(v.shape()));
    if (v.dim(2) != frames)
      throw ShapeError(std::string(what) + " has " + std::to_string(v.dim(2)) +
                       " frames but audio has " + std::to_string(frames));
  };
  check_video(lips, "lip");
  if (teacher) check_video(tongues, "tongue");

  std::vector<Tensor> captured(trace_points_.size());
  auto capture = [&](const std::string &name, const Tensor &t) {
    if (!trace) return;
    for (std::size_t i = 0; i < trace_points_.size(); ++i)
      if (trace_points_[i] == name) captured[i] = t;
  };

  const std::size_t streams = art_.size();
  std::vector<Tensor> art(streams);
  for (std::size_t s = 0; s < streams; ++s) {
    art[s] = art_[s][0]->Forward(s == 0 ? lips : tongues, mode);
    art_front_shape_ = art[s].shape();
    art[s].Reshape({b, art[s].dim(1), frames, art[s].dim(3) * art[s].dim(4)});
  }
  art_front_freq_ = art[0].dim(3);

  Tensor a = audio_in_->Forward(audio, mode);
  Tensor e;
  skips_.assign(n + 1, Tensor());
  for (std::size_t k = 0; k <= n; ++k) {
    if (k > 0) {
      a = audio_blocks_[k - 1]->Forward(a, mode);
      for (std::size_t s = 0; s < streams; ++s) art[s] = art_[s][k]->Forward(art[s], mode);
    }
    Tensor fused = fusion_[k]->Forward(teacher ? ConcatChannels(art[0], art[1]) : art[0], mode);
    Tensor p = project_[k]->Forward(MeanOverFreq(fused), mode);
    e = ConcatChannels(a, BroadcastFreq(p, a.dim(3)));
    if (!AllFinite(e))
      throw NumericError("non-finite activations at encoder." + std::to_string(k));
    capture("encoder." + std::to_string(k), e);
    skips_[k] = e;
  }

  Tensor seq = FramesToSequence(e);
  for (std::size_t l = 0; l < lstm_.size(); ++l) {
    seq = lstm_[l]->Forward(seq, mode);
    if (!AllFinite(seq)) throw NumericError("non-finite activations at lstm." + std::to_string(l));
    capture("lstm." + std::to_string(l), seq);
  }

  Tensor d = ConcatChannels(BroadcastFreq(SequenceToFrames(seq, c.lstm_hidden, 1), e.dim(3)), e);
  for (std::size_t j = 0; j <= n; ++j) {
    if (j > 0) d = ConcatChannels(d, skips_[n - j]);
    d = decoder_[j]->Forward(d, mode);
    capture("decoder." + std::to_string(j), d);
  }
  Tensor mask = head_act_->Forward(head_->Forward(d, mode), mode);
  if (!AllFinite(mask)) throw NumericError("non-finite activations at mask head");

  if (trace) {
    trace->names = trace_points_;
    trace->features = std::move(captured);
  }
  return mask;
}

void AvseNet::Backward(const Tensor &grad_mask, const std::vector<Tensor> *trace_grads) {
  const ModelConfig &c = config_;
  const std::size_t n = c.n_feature_blocks;
  const bool teacher = kind_ == ModelKind::kTeacher;
  if (trace_grads && trace_grads->size() != trace_points_.size())
    throw InvalidArgument("trace gradient count does not match trace points");
  auto inject = [&](const std::string &name, Tensor *g) {
    if (!trace_grads) return;
    for (std::size_t i = 0; i < trace_points_.size(); ++i)
      if (trace_points_[i] == name && !(*trace_grads)[i].empty()) Accumulate(g, (*trace_grads)[i]);
  };

  std::vector<Tensor> grad_e(n + 1);
  Tensor g = head_->Backward(head_act_->Backward(grad_mask));
  for (std::size_t j = n + 1; j-- > 0;) {
    inject("decoder." + std::to_string(j), &g);
    Tensor gin = decoder_[j]->Backward(g);
    const std::size_t k = n - j;
    Tensor g_prev, g_skip;
    const std::size_t prev_channels = j == 0 ? c.lstm_hidden : c.AudioChannels(k);
    SplitChannels(gin, prev_channels, &g_prev, &g_skip);
    Accumulate(&grad_e[k], g_skip);
    g = std::move(g_prev);
  }

  // g is now the gradient of the broadcast LSTM output, b x h x t x f_n.
  Tensor gseq = FramesToSequence(BroadcastFreqBackward(g));
  for (std::size_t l = lstm_.size(); l-- > 0;) {
    inject("lstm." + std::to_string(l), &gseq);
    gseq = lstm_[l]->Backward(gseq);
  }
  Accumulate(&grad_e[n], SequenceToFrames(gseq, 2 * c.AudioChannels(n), c.AudioFreq(n)));

  const std::size_t streams = art_.size();
  const std::size_t width = c.articulation_channels.back();
  Tensor g_audio_next;
  std::vector<Tensor> g_art_next(streams);
  for (std::size_t k = n + 1; k-- > 0;) {
    inject("encoder." + std::to_string(k), &grad_e[k]);
    Tensor ga, gp;
    SplitChannels(grad_e[k], c.AudioChannels(k), &ga, &gp);
    if (!g_audio_next.empty()) Accumulate(&ga, g_audio_next);
    Tensor g_fused = MeanOverFreqBackward(project_[k]->Backward(BroadcastFreqBackward(gp)),
                                          c.ArticulationFreq(k));
    Tensor g_cat = fusion_[k]->Backward(g_fused);
    std::vector<Tensor> g_art(streams);
    if (teacher)
      SplitChannels(g_cat, width, &g_art[0], &g_art[1]);
    else
      g_art[0] = std::move(g_cat);
    for (std::size_t s = 0; s < streams; ++s)
      if (!g_art_next[s].empty()) Accumulate(&g_art[s], g_art_next[s]);
    if (k > 0) {
      g_audio_next = audio_blocks_[k - 1]->Backward(ga);
      for (std::size_t s = 0; s < streams; ++s) g_art_next[s] = art_[s][k]->Backward(g_art[s]);
    } else {
      audio_in_->Backward(ga);
      for (std::size_t s = 0; s < streams; ++s) {
        g_art[s].Reshape(art_front_shape_);
        art_[s][0]->Backward(g_art[s]);
      }
    }
  }
}

std::vector<Parameter *> AvseNet::Parameters() {
  std::vector<Parameter *> out;
  audio_in_->CollectParameters(&out);
  for (auto &b : audio_blocks_) b->CollectParameters(&out);
  for (auto &stream : art_)
    for (auto &b : stream) b->CollectParameters(&out);
  for (std::size_t k = 0; k < fusion_.size(); ++k) {
    fusion_[k]->CollectParameters(&out);
    project_[k]->CollectParameters(&out);
  }
  for (auto &l : lstm_) l->CollectParameters(&out);
  for (auto &d : decoder_) d->CollectParameters(&out);
  head_->CollectParameters(&out);
  return out;
}

std::vector<Buffer> AvseNet::Buffers() {
  std::vector<Buffer> out;
  audio_in_->CollectBuffers(&out);
  for (auto &b : audio_blocks_) b->CollectBuffers(&out);
  for (auto &stream : art_)
    for (auto &b : stream) b->CollectBuffers(&out);
  for (auto &d : decoder_) d->CollectBuffers(&out);
  return out;
}

void AvseNet::ZeroGrad() {
  for (Parameter *p : Parameters()) p->grad.SetZero();
}

std::size_t AvseNet::NumParameters() {
  std::size_t total = 0;
  for (Parameter *p : Parameters()) total += p->value.size();
  return total;
}

std::uint64_t AvseNet::Checksum() {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const Tensor &t) {
    const auto *bytes = reinterpret_cast<const unsigned char *>(t.data());
    for (std::size_t i = 0; i < t.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  for (Parameter *p : Parameters()) mix(p->value);
  for (const Buffer &b : Buffers()) mix(*b.value);
  return h;
}

AvseNet BuildTeacher(const ModelConfig &config, std::uint64_t seed) {
  return AvseNet(ModelKind::kTeacher, config, seed);
}

AvseNet BuildStudent(const ModelConfig &config, std::uint64_t seed) {
  return AvseNet(ModelKind::kStudent, config, seed);
}

namespace {

NetworkOutput RunForward(AvseNet &net, std::span<const ComplexSpectrogram> noisy,
                         std::span<const ArticulationSequence> lips,
                         std::span<const ArticulationSequence> tongues, Mode mode) {
  if (noisy.size() != lips.size() ||
      (net.kind() == ModelKind::kTeacher && tongues.size() != noisy.size()))
    throw InvalidArgument("batch modalities differ in item count");
  const Tensor audio = SpectrogramBatch(noisy);
  const Tensor lip = ArticulationBatch(lips);
  const Tensor tongue = net.kind() == ModelKind::kTeacher ? ArticulationBatch(tongues) : Tensor();
  NetworkOutput out;
  out.mask_tensor = net.ForwardTensors(audio, lip, tongue, mode, &out.trace);
  for (std::size_t i = 0; i < noisy.size(); ++i) {
    out.masks.push_back(MaskFromTensor(out.mask_tensor, i, net.config().mask_bound));
    out.enhanced.push_back(ApplyMask(noisy[i], out.masks.back()));
  }
  return out;
}

}  // namespace

NetworkOutput TeacherForward(AvseNet &net, std::span<const ComplexSpectrogram> noisy,
                             std::span<const ArticulationSequence> lips,
                             std::span<const ArticulationSequence> tongues, Mode mode) {
  if (net.kind() != ModelKind::kTeacher) throw InvalidArgument("teacher_forward needs a teacher");
  return RunForward(net, noisy, lips, tongues, mode);
}

NetworkOutput StudentForward(AvseNet &net, std::span<const ComplexSpectrogram> noisy,
                             std::span<const ArticulationSequence> lips, Mode mode) {
  if (net.kind() != ModelKind::kStudent) throw InvalidArgument("student_forward needs a student");
  return RunForward(net, noisy, lips, {}, mode);
}

}  // namespace avse
