// core/src/video.cc

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

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "avse/corpus.h"
#include "avse/error.h"

namespace avse {

static_assert(std::endian::native == std::endian::little,
              "uvf encoding assumes a little-endian host");

double ArticulationSequence::At(std::size_t channel, std::size_t t,
                                std::size_t y, std::size_t x) const {
  const std::size_t pixel = y * width + x;
  switch (channel) {
    case 0: return raw[t * height * width + pixel];
    case 1: return mean[pixel];
    case 2: return stddev[pixel];
  }
  throw InvalidArgument("articulation channel must be 0, 1 or 2");
}

ArticulationSequence ArticulationSequence::CropFrames(std::size_t start,
                                                      std::size_t count) const {
  if (start + count > num_frames)
    throw InvalidArgument("video crop exceeds " + std::to_string(num_frames) +
                          " frames");
  ArticulationSequence out;
  out.num_frames = count;
  out.height = height;
  out.width = width;
  out.fps = fps;
  out.modality = modality;
  const std::size_t frame = height * width;
  out.raw.assign(raw.begin() + static_cast<std::ptrdiff_t>(start * frame),
                 raw.begin() + static_cast<std::ptrdiff_t>((start + count) * frame));
  out.mean = mean;
  out.stddev = stddev;
  return out;
}

VideoFrames ResizeFrames(const VideoFrames &video, std::size_t height,
                         std::size_t width) {
  if (video.height == height && video.width == width) return video;
  if (video.height == 0 || video.width == 0)
    throw InvalidArgument("cannot resize an empty frame");
  VideoFrames out;
  out.num_frames = video.num_frames;
  out.height = height;
  out.width = width;
  out.fps = video.fps;
  out.pixels.resize(video.num_frames * height * width);
  const double sy = static_cast<double>(video.height) / height;
  const double sx = static_cast<double>(video.width) / width;
  for (std::size_t t = 0; t < video.num_frames; ++t) {
    for (std::size_t y = 0; y < height; ++y) {
      const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0,
                                   static_cast<double>(video.height - 1));
      const auto y0 = static_cast<std::size_t>(fy);
      const std::size_t y1 = std::min(y0 + 1, video.height - 1);
      const double wy = fy - y0;
      for (std::size_t x = 0; x < width; ++x) {
        const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0,
                                     static_cast<double>(video.width - 1));
        const auto x0 = static_cast<std::size_t>(fx);
        const std::size_t x1 = std::min(x0 + 1, video.width - 1);
        const double wx = fx - x0;
        const double top = (1 - wx) * video.At(t, y0, x0) + wx * video.At(t, y0, x1);
        const double bot = (1 - wx) * video.At(t, y1, x0) + wx * video.At(t, y1, x1);
        out.pixels[(t * height + y) * width + x] = (1 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

ArticulationSequence ArticulationPreprocess(const VideoFrames &video,
                                            Modality modality,
                                            std::size_t height,
                                            std::size_t width) {
  if (video.num_frames == 0) throw InvalidArgument("empty video sequence");
  if (video.pixels.size() != video.num_frames * video.height * video.width)
    throw ShapeError("video pixel count does not match T x H x W");
  const VideoFrames resized = ResizeFrames(video, height, width);

  ArticulationSequence seq;
  seq.num_frames = resized.num_frames;
  seq.height = height;
  seq.width = width;
  seq.fps = video.fps;
  seq.modality = modality;
  const std::size_t frame = height * width;
  seq.raw.assign(resized.pixels.begin(), resized.pixels.end());
  seq.mean.assign(frame, 0.0);
  seq.stddev.assign(frame, 0.0);
  const double count = static_cast<double>(seq.num_frames);
  for (std::size_t t = 0; t < seq.num_frames; ++t)
    for (std::size_t p = 0; p < frame; ++p) seq.mean[p] += resized.pixels[t * frame + p];
  for (double &m : seq.mean) m /= count;
  for (std::size_t t = 0; t < seq.num_frames; ++t)
    for (std::size_t p = 0; p < frame; ++p) {
      const double d = resized.pixels[t * frame + p] - seq.mean[p];
      seq.stddev[p] += d * d;
    }
  for (double &s : seq.stddev) s = std::sqrt(s / count);
  return seq;
}

namespace {

constexpr char kUvfMagic[4] = {'A', 'V', 'S', 'E'};
constexpr std::uint32_t kUvfVersion = 1;
constexpr std::size_t kUvfHeader = 4 + 4 * 4 + 8;

void AppendU32(std::string *out, std::uint32_t v) {
  char buf[4];
  std::memcpy(buf, &v, 4);
  out->append(buf, 4);
}

std::uint32_t LoadU32(const char *p) {
  std::uint32_t v;
  std::memcpy(&v, p, 4);
  return v;
}

}  // namespace

std::string EncodeUvf(const VideoFrames &video) {
  const std::size_t count = video.num_frames * video.height * video.width;
  if (video.pixels.size() != count)
    throw ShapeError("video pixel count does not match T x H x W");
  std::string out(kUvfMagic, 4);
  out.reserve(kUvfHeader + count);
  AppendU32(&out, kUvfVersion);
  AppendU32(&out, static_cast<std::uint32_t>(video.num_frames));
  AppendU32(&out, static_cast<std::uint32_t>(video.height));
  AppendU32(&out, static_cast<std::uint32_t>(video.width));
  char fps[8];
  std::memcpy(fps, &video.fps, 8);
  out.append(fps, 8);
  for (double v : video.pixels) {
    const double q = std::nearbyint(std::clamp(v, 0.0, 1.0) * 255.0);
    out.push_back(static_cast<char>(static_cast<unsigned char>(q)));
  }
  return out;
}

VideoFrames DecodeUvf(std::string_view bytes) {
  if (bytes.size() < kUvfHeader || std::memcmp(bytes.data(), kUvfMagic, 4) != 0)
    throw IoError("not a uvf stream (bad magic)");
  const std::uint32_t version = LoadU32(bytes.data() + 4);
  if (version != kUvfVersion)
    throw IoError("unsupported uvf version " + std::to_string(version));
  VideoFrames video;
  video.num_frames = LoadU32(bytes.data() + 8);
  video.height = LoadU32(bytes.data() + 12);
  video.width = LoadU32(bytes.data() + 16);
  std::memcpy(&video.fps, bytes.data() + 20, 8);
  const std::size_t count = video.num_frames * video.height * video.width;
  if (bytes.size() != kUvfHeader + count)
    throw IoError("uvf payload size " + std::to_string(bytes.size() - kUvfHeader) +
                  " does not match header (" + std::to_string(count) + ")");
  video.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i)
    video.pixels[i] = static_cast<unsigned char>(bytes[kUvfHeader + i]) / 255.0;
  return video;
}

void WriteUvf(const std::string &path, const VideoFrames &video) {
  const std::string bytes = EncodeUvf(video);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write uvf file " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path);
}

VideoFrames ReadUvf(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open uvf file " + path);
  std::string bytes((std::istreambuf_iterator<char>(in)),
                    std::istreambuf_iterator<char>());
  try {
    return DecodeUvf(bytes);
  } catch (const IoError &e) {
    throw IoError(path + ": " + e.what());
  }
}

}  // namespace avse
