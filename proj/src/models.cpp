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
#include "volcon/models.hpp"

#include "volcon/errors.hpp"

namespace volcon {

void EncoderSpec::validate() const {
  if (input_channels < 1) throw ConfigError("encoder input_channels must be >= 1");
  if (output_stride != 8 && output_stride != 16 && output_stride != 32)
    throw ConfigError("output_stride must be 8, 16 or 32, got " + std::to_string(output_stride));
  if (family == EncoderFamily::kResNet18 && feature_dim != 512)
    throw ConfigError("resnet18 encoders have feature_dim 512");
  if (feature_dim < 1) throw ConfigError("feature_dim must be >= 1");
}

EncoderSpec EncoderSpec::resnet18(Index output_stride) {
  return {EncoderFamily::kResNet18, 1, 512, output_stride};
}

EncoderSpec EncoderSpec::tiny(Index feature_dim, Index output_stride) {
  return {EncoderFamily::kTiny, 1, feature_dim, output_stride};
}

void ProjectionHeadSpec::validate() const {
  if (in_dim < 1 || hidden_dim < 1 || out_dim < 1)
    throw ConfigError("projection head dims must be >= 1");
}

void SegmentationHeadSpec::validate() const {
  if (num_classes < 2) throw ConfigError("segmentation needs at least 2 classes");
  if (in_channels < 1 || hidden_channels < 1) throw ConfigError("head channels must be >= 1");
  for (Index r : atrous_rates)
    if (r < 1) throw ConfigError("atrous rates must be >= 1");
}

SegmentationHeadSpec SegmentationHeadSpec::for_encoder(const EncoderSpec& enc, int num_classes) {
  SegmentationHeadSpec s;
  s.kind = enc.family == EncoderFamily::kResNet18 ? HeadKind::kAspp : HeadKind::kTiny;
  s.in_channels = enc.feature_dim;
  s.num_classes = num_classes;
  return s;
}

std::string to_string(EncoderFamily f) {
  return f == EncoderFamily::kResNet18 ? "resnet18" : "tiny";
}

std::string to_string(HeadKind k) { return k == HeadKind::kAspp ? "aspp" : "tiny"; }

EncoderFamily encoder_family_from_string(const std::string& s) {
  if (s == "resnet18") return EncoderFamily::kResNet18;
  if (s == "tiny") return EncoderFamily::kTiny;
  throw ConfigError("unknown encoder family '" + s + "'");
}

HeadKind head_kind_from_string(const std::string& s) {
  if (s == "aspp") return HeadKind::kAspp;
  if (s == "tiny") return HeadKind::kTiny;
  throw ConfigError("unknown head kind '" + s + "'");
}

void to_json(nlohmann::json& j, const EncoderSpec& s) {
  j = {{"family", to_string(s.family)},
       {"input_channels", s.input_channels},
       {"feature_dim", s.feature_dim},
       {"output_stride", s.output_stride}};
}

void from_json(const nlohmann::json& j, EncoderSpec& s) {
  s.family = encoder_family_from_string(j.at("family").get<std::string>());
  s.input_channels = j.at("input_channels").get<Index>();
  s.feature_dim = j.at("feature_dim").get<Index>();
  s.output_stride = j.at("output_stride").get<Index>();
}

void to_json(nlohmann::json& j, const ProjectionHeadSpec& s) {
  j = {{"in_dim", s.in_dim}, {"hidden_dim", s.hidden_dim}, {"out_dim", s.out_dim}};
}

void from_json(const nlohmann::json& j, ProjectionHeadSpec& s) {
  s.in_dim = j.at("in_dim").get<Index>();
  s.hidden_dim = j.at("hidden_dim").get<Index>();
  s.out_dim = j.at("out_dim").get<Index>();
}

void to_json(nlohmann::json& j, const SegmentationHeadSpec& s) {
  j = {{"kind", to_string(s.kind)},
       {"in_channels", s.in_channels},
       {"num_classes", s.num_classes},
       {"atrous_rates", s.atrous_rates},
       {"hidden_channels", s.hidden_channels}};
}

void from_json(const nlohmann::json& j, SegmentationHeadSpec& s) {
  s.kind = head_kind_from_string(j.at("kind").get<std::string>());
  s.in_channels = j.at("in_channels").get<Index>();
  s.num_classes = j.at("num_classes").get<int>();
  s.atrous_rates = j.at("atrous_rates").get<std::vector<Index>>();
  s.hidden_channels = j.at("hidden_channels").get<Index>();
}

Image reflect_pad_to_multiple(const Image& img, Index multiple) {
  if (multiple < 1) throw ConfigError("pad multiple must be >= 1");
  const Index h = img.rows(), w = img.cols();
  const Index ph = (h + multiple - 1) / multiple * multiple;
  const Index pw = (w + multiple - 1) / multiple * multiple;
  if (ph == h && pw == w) return img;
  if ((ph - h >= h && h > 1) || (pw - w >= w && w > 1))
    throw DataError("image too small to reflect-pad to a multiple of " + std::to_string(multiple));
  auto reflect = [](Index i, Index n) {
    if (n == 1) return Index(0);
    return i < n ? i : 2 * (n - 1) - i;
  };
  Image out(ph, pw);
  for (Index y = 0; y < ph; ++y)
    for (Index x = 0; x < pw; ++x) out(y, x) = img(reflect(y, h), reflect(x, w));
  return out;
}

}  // namespace volcon
