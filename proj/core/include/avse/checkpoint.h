// core/include/avse/checkpoint.h

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

#ifndef AVSE_CHECKPOINT_H_
#define AVSE_CHECKPOINT_H_

#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "avse/model.h"
#include "avse/spectral.h"
#include "avse/tensor.h"

namespace avse {

// Container layout, all little-endian:
//   "AVCK" u32 version u32 count
//   count x { u16 name_len, name, u8 rank, rank x u32 dim, f64 values }
//   u32 text_len, text = "key=value\n" lines
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Tensor value;
};

struct Checkpoint {
  std::vector<NamedTensor> tensors;
  std::vector<std::pair<std::string, std::string>> metadata;

  const std::string *Find(const std::string &key) const;
};

std::string EncodeCheckpoint(const Checkpoint &ckpt);
/// Throws IoError on truncated or malformed input.
Checkpoint DecodeCheckpoint(std::string_view bytes);

/// Snapshot of every parameter and batch-norm buffer plus the model and
/// spectral configuration. `extra` is appended to the metadata.
Checkpoint SnapshotModel(AvseNet &net, const SpectralConfig &spectral,
                         const std::vector<std::pair<std::string, std::string>> &extra = {});
/// Copies tensor values into `net`; names and shapes must match exactly.
void RestoreModel(const Checkpoint &ckpt, AvseNet *net);

void SaveCheckpoint(const std::string &path, const Checkpoint &ckpt);
Checkpoint LoadCheckpoint(const std::string &path);

struct LoadedModel {
  AvseNet net;
  SpectralConfig spectral;
  Checkpoint checkpoint;
};
/// Rebuilds the network described by the checkpoint and restores it.
LoadedModel LoadModel(const std::string &path);
LoadedModel ModelFromCheckpoint(const Checkpoint &ckpt);

std::vector<std::pair<std::string, std::string>> SpectralConfigToKeyValues(
    const SpectralConfig &config);
SpectralConfig SpectralConfigFromKeyValues(
    const std::map<std::string, std::string> &values);

}  // namespace avse

#endif  // AVSE_CHECKPOINT_H_
