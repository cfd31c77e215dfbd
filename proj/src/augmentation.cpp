/* Copyright 2026 The Volcon Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "volcon/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "volcon/errors.hpp"

namespace volcon {

Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream) {
  std::vector<std::uint32_t> words;
  words.reserve(2 * (stream.size() + 1));
  auto push = [&words](std::uint64_t v) {
    words.push_back(static_cast<std::uint32_t>(v & 0xffffffffu));
    words.push_back(static_cast<std::uint32_t>(v >> 32));
  };
  push(seed);
  for (auto s : stream) push(s);
  std::seed_seq seq(words.begin(), words.end());
  return Rng(seq);
}

void AugmentationPolicy::validate() const {
  if (crop_size < 1) throw ConfigError("crop_size must be >= 1");
  if (!(std > 0.0)) throw ConfigError("normalization std must be > 0");
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0))
    throw ConfigError("crop scale range must satisfy 0 < lo <= hi <= 1");
  if (flip_probability < 0.0 || flip_probability > 1.0)
    throw ConfigError("flip_probability must be in [0, 1]");
  if (brightness < 0.0 || contrast < 0.0)
    throw ConfigError("jitter strengths must be non-negative");
}

AugmentationPolicy AugmentationPolicy::with_mode(AugmentationMode m) const {
  AugmentationPolicy p = *this;
  p.mode = m;
  return p;
}

Image resize_bilinear(const Image& img, Index out_h, Index out_w) {
  const Index in_h = img.rows(), in_w = img.cols();
  Image out(out_h, out_w);
  const double sy = static_cast<double>(in_h) / out_h;
  const double sx = static_cast<double>(in_w) / out_w;
  for (Index oy = 0; oy < out_h; ++oy) {
    double fy = std::max(0.0, (oy + 0.5) * sy - 0.5);
    Index y0 = std::min(static_cast<Index>(fy), in_h - 1);
    Index y1 = std::min(y0 + 1, in_h - 1);
    const double wy = fy - y0;
    for (Index ox = 0; ox < out_w; ++ox) {
      double fx = std::max(0.0, (ox + 0.5) * sx - 0.5);
      Index x0 = std::min(static_cast<Index>(fx), in_w - 1);
      Index x1 = std::min(x0 + 1, in_w - 1);
      const double wx = fx - x0;
      const double top = (1.0 - wx) * img(y0, x0) + wx * img(y0, x1);
      const double bot = (1.0 - wx) * img(y1, x0) + wx * img(y1, x1);
      out(oy, ox) = static_cast<float>((1.0 - wy) * top + wy * bot);
    }
  }
  return out;
}

Image random_resized_crop(const Image& img, Index out_size, double scale_min, double scale_max,
                          Rng& rng) {
  if (img.rows() < 2 || img.cols() < 2) throw DataError("crop input must be at least 2x2");
  if (out_size < 1) throw ConfigError("crop output size must be >= 1");
  if (!(scale_min > 0.0 && scale_min <= scale_max && scale_max <= 1.0))
    throw ConfigError("crop scale range must satisfy 0 < lo <= hi <= 1");
  const double H = static_cast<double>(img.rows()), W = static_cast<double>(img.cols());
  std::uniform_real_distribution<double> scale_dist(scale_min, scale_max);
  const double area = scale_dist(rng) * H * W;
  // Aspect ratio w/h limited to what fits inside the image at this area.
  double lo = std::max(std::log(3.0 / 4.0), std::log(area / (H * H)));
  double hi = std::min(std::log(4.0 / 3.0), std::log(W * W / area));
  if (lo > hi) {
    lo = std::log(area / (H * H));
    hi = std::log(W * W / area);
  }
  std::uniform_real_distribution<double> ratio_dist(lo, hi);
  const double ratio = lo == hi ? std::exp(lo) : std::exp(ratio_dist(rng));
  const Index w = std::clamp<Index>(std::lround(std::sqrt(area * ratio)), 1, img.cols());
  const Index h = std::clamp<Index>(std::lround(std::sqrt(area / ratio)), 1, img.rows());
  std::uniform_int_distribution<Index> y_dist(0, img.rows() - h), x_dist(0, img.cols() - w);
  const Index y = y_dist(rng), x = x_dist(rng);
  return resize_bilinear(img.block(y, x, h, w), out_size, out_size);
}

Image horizontal_flip(const Image& img, double probability, Rng& rng) {
  std::bernoulli_distribution flip(std::clamp(probability, 0.0, 1.0));
  if (!flip(rng)) return img;
  return img.rowwise().reverse();
}

Image color_jitter(const Image& img, double brightness, double contrast, Rng& rng) {
  if (brightness < 0.0 || contrast < 0.0) throw ConfigError("jitter strengths must be >= 0");
  Image out = img;
  if (contrast > 0.0) {
    std::uniform_real_distribution<double> c_dist(1.0 - contrast, 1.0 + contrast);
    const double c = c_dist(rng);
    const double mean = img.cast<double>().mean();
    out = ((img.cast<double>().array() - mean) * c + mean).cast<float>().matrix();
  }
  if (brightness > 0.0) {
    std::uniform_real_distribution<double> b_dist(-brightness, brightness);
    const double range = static_cast<double>(img.maxCoeff()) - img.minCoeff();
    const double b = b_dist(rng) * range;
    out = (out.cast<double>().array() + b).cast<float>().matrix();
  }
  return out;
}

Image normalize(const Image& img, double mean, double std) {
  if (!(std > 0.0)) throw ConfigError("normalization std must be > 0");
  return ((img.cast<double>().array() - mean) / std).cast<float>().matrix();
}

Image denormalize(const Image& img, double mean, double std) {
  if (!(std > 0.0)) throw ConfigError("normalization std must be > 0");
  return (img.cast<double>().array() * std + mean).cast<float>().matrix();
}

Image apply_policy(const Image& img, const AugmentationPolicy& policy, Rng& rng) {
  policy.validate();
  if (policy.mode != AugmentationMode::kContrastive)
    return normalize(img, policy.mean, policy.std);
  Image out = random_resized_crop(img, policy.crop_size, policy.scale_min, policy.scale_max, rng);
  out = horizontal_flip(out, policy.flip_probability, rng);
  out = color_jitter(out, policy.brightness, policy.contrast, rng);
  return normalize(out, policy.mean, policy.std);
}

ViewPair make_view_pair(const CrossLineSlice& slice, const AugmentationPolicy& policy, Rng& rng) {
  if (policy.mode != AugmentationMode::kContrastive)
    throw ConfigError("view pairs require a contrastive augmentation policy");
  ViewPair pair;
  pair.view_a = apply_policy(slice.image, policy, rng);
  pair.view_b = apply_policy(slice.image, policy, rng);
  pair.source_slice_index = slice.crossline_index;
  return pair;
}

std::string to_string(AugmentationMode mode) {
  switch (mode) {
    case AugmentationMode::kContrastive: return "contrastive";
    case AugmentationMode::kFinetune: return "finetune";
    default: return "eval";
  }
}

AugmentationMode augmentation_mode_from_string(const std::string& s) {
  if (s == "contrastive") return AugmentationMode::kContrastive;
  if (s == "finetune") return AugmentationMode::kFinetune;
  if (s == "eval") return AugmentationMode::kEval;
  throw ConfigError("unknown augmentation mode '" + s + "'");
}

void to_json(nlohmann::json& j, const AugmentationPolicy& p) {
  j = {{"mode", to_string(p.mode)},
       {"crop_size", p.crop_size},
       {"scale_min", p.scale_min},
       {"scale_max", p.scale_max},
       {"flip_probability", p.flip_probability},
       {"brightness", p.brightness},
       {"contrast", p.contrast},
       {"mean", p.mean},
       {"std", p.std}};
}

}  // namespace volcon
