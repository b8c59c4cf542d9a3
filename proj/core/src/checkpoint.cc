// core/src/checkpoint.cc

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

#include "avse/checkpoint.h"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "avse/error.h"

namespace avse {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint codec assumes a little-endian host");

template <class T>
void Put(std::string *out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out->append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <class T>
  T Get() {
    Need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string_view Take(std::size_t n) {
    Need(n);
    std::string_view s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw IoError("checkpoint truncated at byte " + std::to_string(pos_));
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

int ParseInt(const std::string &key, const std::string &value) {
  int v = 0;
  auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (ec != std::errc() || p != value.data() + value.size())
    throw ConfigError(key + ": expected an integer, got '" + value + "'");
  return v;
}

}  // namespace

const std::string *Checkpoint::Find(const std::string &key) const {
  for (const auto &kv : metadata)
    if (kv.first == key) return &kv.second;
  return nullptr;
}

std::string EncodeCheckpoint(const Checkpoint &ckpt) {
  std::string out = "AVCK";
  Put<std::uint32_t>(&out, kCheckpointVersion);
  Put<std::uint32_t>(&out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const NamedTensor &t : ckpt.tensors) {
    if (t.name.size() > 0xffff) throw InvalidArgument("tensor name too long: " + t.name);
    if (t.value.rank() > 0xff) throw InvalidArgument("tensor rank too large: " + t.name);
    Put<std::uint16_t>(&out, static_cast<std::uint16_t>(t.name.size()));
    out += t.name;
    Put<std::uint8_t>(&out, static_cast<std::uint8_t>(t.value.rank()));
    for (std::size_t d : t.value.shape()) Put<std::uint32_t>(&out, static_cast<std::uint32_t>(d));
    out.append(reinterpret_cast<const char *>(t.value.data()), t.value.size() * sizeof(double));
  }
  std::string text;
  for (const auto &[k, v] : ckpt.metadata) {
    if (k.find_first_of("=\n") != std::string::npos || v.find('\n') != std::string::npos)
      throw InvalidArgument("metadata entry cannot contain '=' in key or newlines: " + k);
    text += k + "=" + v + "\n";
  }
  Put<std::uint32_t>(&out, static_cast<std::uint32_t>(text.size()));
  out += text;
  return out;
}

Checkpoint DecodeCheckpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.Take(4) != "AVCK") throw IoError("not a checkpoint (bad magic)");
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  const auto count = r.Get<std::uint32_t>();
  Checkpoint ckpt;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = std::string(r.Take(r.Get<std::uint16_t>()));
    const auto rank = r.Get<std::uint8_t>();
    Shape shape(rank);
    for (auto &d : shape) d = r.Get<std::uint32_t>();
    t.value = Tensor(shape);
    const std::string_view raw = r.Take(t.value.size() * sizeof(double));
    std::memcpy(t.value.data(), raw.data(), raw.size());
    ckpt.tensors.push_back(std::move(t));
  }
  std::string text(r.Take(r.Get<std::uint32_t>()));
  if (!r.AtEnd()) throw IoError("trailing bytes after checkpoint metadata");
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("malformed checkpoint metadata line: " + line);
    ckpt.metadata.emplace_back(line.substr(0, eq), line.substr(eq + 1));
  }
  return ckpt;
}

std::vector<std::pair<std::string, std::string>> SpectralConfigToKeyValues(
    const SpectralConfig &c) {
  return {{"spectral.sample_rate", std::to_string(c.sample_rate)},
          {"spectral.win_length", std::to_string(c.win_length)},
          {"spectral.hop_length", std::to_string(c.hop_length)},
          {"spectral.fft_size", std::to_string(c.fft_size)}};
}

SpectralConfig SpectralConfigFromKeyValues(const std::map<std::string, std::string> &values) {
  SpectralConfig c;
  auto set = [&](const char *key, int *field) {
    auto it = values.find(key);
    if (it != values.end()) *field = ParseInt(key, it->second);
  };
  set("spectral.sample_rate", &c.sample_rate);
  set("spectral.win_length", &c.win_length);
  set("spectral.hop_length", &c.hop_length);
  set("spectral.fft_size", &c.fft_size);
  return c;
}

Checkpoint SnapshotModel(AvseNet &net, const SpectralConfig &spectral,
                         const std::vector<std::pair<std::string, std::string>> &extra) {
  Checkpoint ckpt;
  for (Parameter *p : net.Parameters()) ckpt.tensors.push_back({p->name, p->value});
  for (const Buffer &b : net.Buffers()) ckpt.tensors.push_back({b.name, *b.value});
  ckpt.metadata.emplace_back("kind", std::string(ModelKindName(net.kind())));
  for (auto &kv : ModelConfigToKeyValues(net.config())) ckpt.metadata.push_back(kv);
  for (auto &kv : SpectralConfigToKeyValues(spectral)) ckpt.metadata.push_back(kv);
  for (const auto &kv : extra) ckpt.metadata.push_back(kv);
  return ckpt;
}

void RestoreModel(const Checkpoint &ckpt, AvseNet *net) {
  std::vector<std::pair<std::string, Tensor *>> slots;
  for (Parameter *p : net->Parameters()) slots.emplace_back(p->name, &p->value);
  for (const Buffer &b : net->Buffers()) slots.emplace_back(b.name, b.value);
  if (slots.size() != ckpt.tensors.size())
    throw IoError("checkpoint holds " + std::to_string(ckpt.tensors.size()) +
                  " tensors, network expects " + std::to_string(slots.size()));
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const NamedTensor &t = ckpt.tensors[i];
    if (t.name != slots[i].first)
      throw IoError("checkpoint tensor " + std::to_string(i) + " is '" + t.name +
                    "', expected '" + slots[i].first + "'");
    if (!t.value.SameShape(*slots[i].second))
      throw IoError("checkpoint tensor '" + t.name + "' has shape " +
                    ShapeString(t.value.shape()) + ", expected " +
                    ShapeString(slots[i].second->shape()));
    *slots[i].second = t.value;
  }
}

void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt) {
  const std::string bytes = EncodeCheckpoint(ckpt);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}

Checkpoint LoadCheckpoint(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return DecodeCheckpoint(ss.str());
}

LoadedModel ModelFromCheckpoint(const Checkpoint &ckpt) {
  std::map<std::string, std::string> meta(ckpt.metadata.begin(), ckpt.metadata.end());
  auto kind_it = meta.find("kind");
  if (kind_it == meta.end()) throw IoError("checkpoint metadata lacks 'kind'");
  const ModelKind kind = ParseModelKind(kind_it->second);
  const ModelConfig config = ModelConfigFromKeyValues(meta);
  LoadedModel loaded{AvseNet(kind, config, 0), SpectralConfigFromKeyValues(meta), ckpt};
  loaded.spectral.Validate();
  RestoreModel(ckpt, &loaded.net);
  return loaded;
}

LoadedModel LoadModel(const std::string &path) { return ModelFromCheckpoint(LoadCheckpoint(path)); }

}  // namespace avse
