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
#ifndef VOLCON_AUGMENTATION_HPP_
#define VOLCON_AUGMENTATION_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

#include "json.hpp"
#include "volcon/volume.hpp"

namespace volcon {

using Rng = std::mt19937_64;

/// Independent stream for (seed, a, b, ...). Used to give every sample of
/// every epoch its own generator so results do not depend on worker count.
Rng derive_rng(std::uint64_t seed, std::initializer_list<std::uint64_t> stream);

enum class AugmentationMode { kContrastive, kFinetune, kEval };

struct AugmentationPolicy {
  AugmentationMode mode = AugmentationMode::kContrastive;
  Index crop_size = 224;
  double scale_min = 0.2;
  double scale_max = 1.0;
  double flip_probability = 0.5;
  double brightness = 0.4;
  double contrast = 0.4;
  double mean = 0.0;
  double std = 1.0;

  /// Throws ConfigError on crop_size < 1, std <= 0 or out-of-range values.
  void validate() const;
  AugmentationPolicy with_mode(AugmentationMode m) const;
};

struct ViewPair {
  Image view_a;
  Image view_b;
  Index source_slice_index = 0;
};

/// Samples a sub-rectangle covering a fraction of the image area drawn from
/// [scale_min, scale_max] (aspect ratio log-uniform in [3/4, 4/3] where it
/// fits) and resizes it to out_size x out_size with bilinear interpolation.
Image random_resized_crop(const Image& img, Index out_size, double scale_min, double scale_max,
                          Rng& rng);

/// Bilinear resize with half-pixel centres (align_corners = false).
Image resize_bilinear(const Image& img, Index out_h, Index out_w);

/// With the given probability, reverses the W axis.
Image horizontal_flip(const Image& img, double probability, Rng& rng);

/// Contrast factor c ~ U[1-contrast, 1+contrast] about the image mean, then
/// brightness offset b ~ U[-brightness, brightness] times the dynamic range.
Image color_jitter(const Image& img, double brightness, double contrast, Rng& rng);

Image normalize(const Image& img, double mean, double std);
Image denormalize(const Image& img, double mean, double std);

/// Full pipeline for the policy's mode. Contrastive: crop, flip, jitter and
/// normalize. Finetune and eval: normalize only.
Image apply_policy(const Image& img, const AugmentationPolicy& policy, Rng& rng);

/// Two independent draws of the contrastive pipeline on one slice.
ViewPair make_view_pair(const CrossLineSlice& slice, const AugmentationPolicy& policy, Rng& rng);

std::string to_string(AugmentationMode mode);
AugmentationMode augmentation_mode_from_string(const std::string& s);

void to_json(nlohmann::json& j, const AugmentationPolicy& p);

}  // namespace volcon

#endif  // VOLCON_AUGMENTATION_HPP_
