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
#ifndef VOLCON_MODELS_HPP_
#define VOLCON_MODELS_HPP_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "volcon/nn/layers.hpp"
#include "volcon/nn/tensor.hpp"
#include "volcon/volume.hpp"

namespace volcon {

using nn::FeatureMap;
using nn::Mode;

enum class EncoderFamily { kResNet18, kTiny };
enum class HeadKind { kAspp, kTiny };

struct EncoderSpec {
  EncoderFamily family = EncoderFamily::kResNet18;
  Index input_channels = 1;
  Index feature_dim = 512;
  Index output_stride = 16;

  void validate() const;
  static EncoderSpec resnet18(Index output_stride = 16);
  static EncoderSpec tiny(Index feature_dim = 64, Index output_stride = 8);
};

struct ProjectionHeadSpec {
  Index in_dim = 512;
  Index hidden_dim = 512;
  Index out_dim = 128;

  void validate() const;
};

struct SegmentationHeadSpec {
  HeadKind kind = HeadKind::kAspp;
  Index in_channels = 512;
  int num_classes = 6;
  std::vector<Index> atrous_rates{6, 12, 18};
  Index hidden_channels = 256;

  void validate() const;
  /// ASPP for resnet18 encoders, a single 3x3 conv for tiny ones.
  static SegmentationHeadSpec for_encoder(const EncoderSpec& enc, int num_classes);
};

std::string to_string(EncoderFamily f);
std::string to_string(HeadKind k);
EncoderFamily encoder_family_from_string(const std::string& s);
HeadKind head_kind_from_string(const std::string& s);

void to_json(nlohmann::json& j, const EncoderSpec& s);
void from_json(const nlohmann::json& j, EncoderSpec& s);
void to_json(nlohmann::json& j, const ProjectionHeadSpec& s);
void from_json(const nlohmann::json& j, ProjectionHeadSpec& s);
void to_json(nlohmann::json& j, const SegmentationHeadSpec& s);
void from_json(const nlohmann::json& j, SegmentationHeadSpec& s);

/// Stacks single-channel images into a batch, replicating the channel when
/// the encoder expects more than one. All images must share a shape.
template <typename Scalar>
FeatureMap<Scalar> make_image_batch(const std::vector<const Image*>& images, Index channels) {
  if (images.empty()) throw ConfigError("empty image batch");
  const Index h = images.front()->rows(), w = images.front()->cols();
  FeatureMap<Scalar> x(static_cast<Index>(images.size()), h, w, channels);
  for (Index n = 0; n < x.batch; ++n) {
    const Image& img = *images[static_cast<std::size_t>(n)];
    if (img.rows() != h || img.cols() != w) throw DataError("images in a batch differ in shape");
    for (Index y = 0; y < h; ++y)
      for (Index xx = 0; xx < w; ++xx)
        x.data.col(x.column(n, y, xx)).setConstant(static_cast<Scalar>(img(y, xx)));
  }
  return x;
}

/// Reflect-pads the bottom and right edges so both sides become multiples
/// of `multiple`.
Image reflect_pad_to_multiple(const Image& img, Index multiple);

namespace detail {

template <typename Scalar>
struct ConvBnRelu {
  nn::Conv2d<Scalar> conv;
  nn::BatchNorm2d<Scalar> bn;
  nn::ReLU<Scalar> relu;
  bool with_relu = true;

  ConvBnRelu() = default;
  ConvBnRelu(nn::ParameterSet<Scalar>& params, const std::string& name, const nn::ConvOptions& opt,
             nn::Rng& rng, bool relu_on = true)
      : conv(params, name + ".conv", opt, rng),
        bn(params, name + ".bn", opt.out_channels),
        with_relu(relu_on) {}

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Mode mode) {
    FeatureMap<Scalar> y = bn.forward(conv.forward(x, mode), mode);
    return with_relu ? relu.forward(y, mode) : y;
  }
  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dy) {
    FeatureMap<Scalar> g = with_relu ? relu.backward(dy) : dy;
    return conv.backward(bn.backward(g));
  }
};

// ResNet basic block with optional dilation and projection shortcut.
template <typename Scalar>
struct BasicBlock {
  ConvBnRelu<Scalar> first;
  ConvBnRelu<Scalar> second;  // no relu; applied after the residual sum
  std::unique_ptr<ConvBnRelu<Scalar>> shortcut;
  nn::ReLU<Scalar> out_relu;

  BasicBlock(nn::ParameterSet<Scalar>& params, const std::string& name, Index in, Index out,
             Index stride, Index dilation, nn::Rng& rng)
      : first(params, name + ".conv1", {in, out, 3, stride, dilation, dilation, false}, rng),
        second(params, name + ".conv2", {out, out, 3, 1, dilation, dilation, false}, rng, false) {
    if (stride != 1 || in != out)
      shortcut = std::make_unique<ConvBnRelu<Scalar>>(params, name + ".downsample",
                                                      nn::ConvOptions{in, out, 1, stride, 0, 1, false},
                                                      rng, false);
  }

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Mode mode) {
    FeatureMap<Scalar> y = second.forward(first.forward(x, mode), mode);
    if (shortcut) {
      y.data += shortcut->forward(x, mode).data;
    } else {
      y.data += x.data;
    }
    return out_relu.forward(y, mode);
  }

  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dy) {
    FeatureMap<Scalar> g = out_relu.backward(dy);
    FeatureMap<Scalar> dx = first.backward(second.backward(g));
    if (shortcut) {
      dx.data += shortcut->backward(g).data;
    } else {
      dx.data += g.data;
    }
    return dx;
  }
};

}  // namespace detail

/// Encoder f(.). The resnet18 family follows the standard ResNet-18 layout
/// (7x7 stem, max pool, four stages of two basic blocks) with stride
/// replaced by dilation in the last stages to reach output strides 16 or 8.
/// The tiny family is log2(output_stride) stride-2 3x3 convs followed by one
/// stride-1 conv to feature_dim, each with batch norm and ReLU.
template <typename Scalar>
class Encoder {
 public:
  struct Output {
    FeatureMap<Scalar> features;      // B x h x w x feature_dim
    nn::Matrix<Scalar> pooled;        // B x feature_dim
  };

  Encoder(const EncoderSpec& spec, nn::Rng& rng) : spec_(spec) {
    spec_.validate();
    if (spec_.family == EncoderFamily::kResNet18) {
      build_resnet18(rng);
    } else {
      build_tiny(rng);
    }
  }
  Encoder(Encoder&&) noexcept = default;
  Encoder& operator=(Encoder&&) noexcept = default;

  const EncoderSpec& spec() const { return spec_; }
  nn::ParameterSet<Scalar>& parameters() { return params_; }
  const nn::ParameterSet<Scalar>& parameters() const { return params_; }

  Output forward(const FeatureMap<Scalar>& images, Mode mode) {
    if (images.channels != spec_.input_channels)
      throw ConfigError("encoder expects " + std::to_string(spec_.input_channels) +
                        " input channels, got " + std::to_string(images.channels));
    if (images.height < spec_.output_stride || images.width < spec_.output_stride)
      throw ConfigError("input " + std::to_string(images.height) + "x" +
                        std::to_string(images.width) + " is smaller than output stride " +
                        std::to_string(spec_.output_stride));
    FeatureMap<Scalar> x = images;
    if (spec_.family == EncoderFamily::kResNet18) {
      x = stem_.forward(x, mode);
      x = pool_.forward(x, mode);
      for (auto& b : blocks_) x = b->forward(x, mode);
    } else {
      for (auto& s : stages_) x = s.forward(x, mode);
    }
    feat_h_ = x.height;
    feat_w_ = x.width;
    Output out;
    out.pooled = nn::global_average_pool(x);
    out.features = std::move(x);
    return out;
  }

  /// Backward from the pooled representation and, optionally, the feature
  /// map. Accumulates parameter gradients; returns the input gradient.
  FeatureMap<Scalar> backward(const nn::Matrix<Scalar>& dpooled,
                              const FeatureMap<Scalar>* dfeatures = nullptr) {
    FeatureMap<Scalar> g = nn::global_average_pool_backward(dpooled, feat_h_, feat_w_);
    if (dfeatures != nullptr) g.data += dfeatures->data;
    if (spec_.family == EncoderFamily::kResNet18) {
      for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it) g = (*it)->backward(g);
      g = pool_.backward(g);
      g = stem_.backward(g);
    } else {
      for (auto it = stages_.rbegin(); it != stages_.rend(); ++it) g = it->backward(g);
    }
    return g;
  }

 private:
  void build_resnet18(nn::Rng& rng) {
    stem_ = detail::ConvBnRelu<Scalar>(params_, "encoder.stem",
                                       {spec_.input_channels, 64, 7, 2, 3, 1, false}, rng);
    const Index widths[4] = {64, 128, 256, 512};
    const bool dilate[4] = {false, false, spec_.output_stride == 8, spec_.output_stride <= 16};
    Index in = 64, dilation = 1;
    for (int layer = 0; layer < 4; ++layer) {
      Index stride = layer == 0 ? 1 : 2;
      const Index previous = dilation;
      if (dilate[layer]) {
        dilation *= stride;
        stride = 1;
      }
      for (int b = 0; b < 2; ++b) {
        const std::string name = "encoder.layer" + std::to_string(layer + 1) + "." + std::to_string(b);
        blocks_.push_back(std::make_unique<detail::BasicBlock<Scalar>>(
            params_, name, in, widths[layer], b == 0 ? stride : 1, b == 0 ? previous : dilation, rng));
        in = widths[layer];
      }
    }
  }

  void build_tiny(nn::Rng& rng) {
    Index in = spec_.input_channels;
    Index downs = 0;
    for (Index s = spec_.output_stride; s > 1; s /= 2) ++downs;
    for (Index k = 0; k < downs; ++k) {
      const Index out = std::min<Index>(spec_.feature_dim, Index(16) << k);
      stages_.emplace_back(params_, "encoder.stage" + std::to_string(k),
                           nn::ConvOptions{in, out, 3, 2, 1, 1, false}, rng);
      in = out;
    }
    stages_.emplace_back(params_, "encoder.stage" + std::to_string(downs),
                         nn::ConvOptions{in, spec_.feature_dim, 3, 1, 1, 1, false}, rng);
  }

  EncoderSpec spec_;
  nn::ParameterSet<Scalar> params_;
  detail::ConvBnRelu<Scalar> stem_;
  nn::MaxPool2d<Scalar> pool_{3, 2, 1};
  std::vector<std::unique_ptr<detail::BasicBlock<Scalar>>> blocks_;
  std::vector<detail::ConvBnRelu<Scalar>> stages_;
  Index feat_h_ = 0, feat_w_ = 0;
};

/// Projection head G(.): one hidden layer MLP followed by row normalization.
template <typename Scalar>
class ProjectionHead {
 public:
  ProjectionHead(const ProjectionHeadSpec& spec, nn::Rng& rng) : spec_(spec) {
    spec_.validate();
    fc1_ = nn::Linear<Scalar>(params_, "projection.fc1", spec_.in_dim, spec_.hidden_dim, rng);
    fc2_ = nn::Linear<Scalar>(params_, "projection.fc2", spec_.hidden_dim, spec_.out_dim, rng);
  }
  ProjectionHead(ProjectionHead&&) noexcept = default;
  ProjectionHead& operator=(ProjectionHead&&) noexcept = default;

  const ProjectionHeadSpec& spec() const { return spec_; }
  nn::ParameterSet<Scalar>& parameters() { return params_; }
  const nn::ParameterSet<Scalar>& parameters() const { return params_; }
  long guard_count() const { return norm_.guard_count(); }

  nn::Matrix<Scalar> forward(const nn::Matrix<Scalar>& pooled, Mode mode) {
    if (pooled.cols() != spec_.in_dim)
      throw ConfigError("projection head expects width " + std::to_string(spec_.in_dim) +
                        ", got " + std::to_string(pooled.cols()));
    return norm_.forward(fc2_.forward(relu_.forward(fc1_.forward(pooled, mode), mode), mode), mode);
  }

  nn::Matrix<Scalar> backward(const nn::Matrix<Scalar>& dz) {
    return fc1_.backward(relu_.backward(fc2_.backward(norm_.backward(dz))));
  }

 private:
  ProjectionHeadSpec spec_;
  nn::ParameterSet<Scalar> params_;
  nn::Linear<Scalar> fc1_, fc2_;
  nn::ReLU<Scalar> relu_;
  nn::L2Normalize<Scalar> norm_;
};

/// Segmentation head. kAspp: atrous spatial pyramid pooling (a 1x1 branch,
/// one 3x3 branch per atrous rate and an image-pooling branch, each with
/// ReLU), a 1x1 fuse conv with ReLU and a 1x1 classifier. kTiny: a single
/// 3x3 conv classifier. Both upsample the logits bilinearly to the target
/// size; softmax is left to the loss.
template <typename Scalar>
class SegmentationHead {
 public:
  SegmentationHead(const SegmentationHeadSpec& spec, nn::Rng& rng) : spec_(spec) {
    spec_.validate();
    const Index in = spec_.in_channels, hid = spec_.hidden_channels;
    const Index classes = spec_.num_classes;
    if (spec_.kind == HeadKind::kTiny) {
      classifier_ = nn::Conv2d<Scalar>(params_, "head.classifier", {in, classes, 3, 1, 1, 1, true}, rng);
      return;
    }
    branches_.emplace_back(params_, "head.aspp.b0", nn::ConvOptions{in, hid, 1, 1, 0, 1, true}, rng);
    for (std::size_t r = 0; r < spec_.atrous_rates.size(); ++r) {
      const Index rate = spec_.atrous_rates[r];
      branches_.emplace_back(params_, "head.aspp.b" + std::to_string(r + 1),
                             nn::ConvOptions{in, hid, 3, 1, rate, rate, true}, rng);
    }
    branch_relus_.resize(branches_.size());
    pool_fc_ = nn::Linear<Scalar>(params_, "head.aspp.pool", in, hid, rng);
    fuse_ = nn::Conv2d<Scalar>(params_, "head.aspp.fuse",
                               {hid * static_cast<Index>(branches_.size() + 1), hid, 1, 1, 0, 1, true}, rng);
    classifier_ = nn::Conv2d<Scalar>(params_, "head.classifier", {hid, classes, 1, 1, 0, 1, true}, rng);
  }
  SegmentationHead(SegmentationHead&&) noexcept = default;
  SegmentationHead& operator=(SegmentationHead&&) noexcept = default;

  const SegmentationHeadSpec& spec() const { return spec_; }
  nn::ParameterSet<Scalar>& parameters() { return params_; }
  const nn::ParameterSet<Scalar>& parameters() const { return params_; }

  /// Per-pixel logits B x target_h x target_w x C.
  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& features, Index target_h, Index target_w,
                             Mode mode) {
    if (features.channels != spec_.in_channels)
      throw ConfigError("segmentation head expects " + std::to_string(spec_.in_channels) +
                        " feature channels, got " + std::to_string(features.channels));
    feat_h_ = features.height;
    feat_w_ = features.width;
    FeatureMap<Scalar> logits;
    if (spec_.kind == HeadKind::kTiny) {
      logits = classifier_.forward(features, mode);
    } else {
      std::vector<FeatureMap<Scalar>> parts;
      for (std::size_t b = 0; b < branches_.size(); ++b)
        parts.push_back(branch_relus_[b].forward(branches_[b].forward(features, mode), mode));
      nn::Matrix<Scalar> pooled =
          pool_relu_.forward(pool_fc_.forward(nn::global_average_pool(features), mode), mode);
      parts.push_back(nn::broadcast_rows(pooled, features.height, features.width));
      FeatureMap<Scalar> fused = fuse_relu_.forward(fuse_.forward(nn::concat_channels(parts), mode), mode);
      logits = classifier_.forward(fused, mode);
    }
    return upsample_.forward(logits, target_h, target_w);
  }

  /// Returns the gradient with respect to the encoder feature map.
  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dlogits) {
    FeatureMap<Scalar> g = classifier_.backward(upsample_.backward(dlogits));
    if (spec_.kind == HeadKind::kTiny) return g;
    g = fuse_.backward(fuse_relu_.backward(g));
    const Index hid = spec_.hidden_channels;
    FeatureMap<Scalar> dfeat(g.batch, feat_h_, feat_w_, spec_.in_channels);
    for (std::size_t b = 0; b < branches_.size(); ++b) {
      const auto part = nn::slice_channels(g, static_cast<Index>(b) * hid, hid);
      dfeat.data += branches_[b].backward(branch_relus_[b].backward(part)).data;
    }
    const auto pool_part = nn::slice_channels(g, static_cast<Index>(branches_.size()) * hid, hid);
    const nn::Matrix<Scalar> dpool =
        pool_fc_.backward(pool_relu_.backward(nn::broadcast_rows_backward(pool_part)));
    dfeat.data += nn::global_average_pool_backward(dpool, feat_h_, feat_w_).data;
    return dfeat;
  }

 private:
  SegmentationHeadSpec spec_;
  nn::ParameterSet<Scalar> params_;
  std::vector<nn::Conv2d<Scalar>> branches_;
  std::vector<nn::ReLU<Scalar>> branch_relus_;
  nn::Linear<Scalar> pool_fc_;
  nn::ReLU<Scalar> pool_relu_;
  nn::Conv2d<Scalar> fuse_;
  nn::ReLU<Scalar> fuse_relu_;
  nn::Conv2d<Scalar> classifier_;
  nn::BilinearUpsample<Scalar> upsample_;
  Index feat_h_ = 0, feat_w_ = 0;
};

/// Marks every encoder parameter as non-trainable. Optimizers skip such
/// parameters and layers stop accumulating their gradients.
template <typename Scalar>
void freeze_encoder(Encoder<Scalar>& encoder) {
  encoder.parameters().set_trainable(false);
}

/// Lowest-index argmax over the class channel of logits.
template <typename Scalar>
LabelImage predict_labels(const FeatureMap<Scalar>& logits, Index image) {
  LabelImage out(logits.height, logits.width);
  for (Index y = 0; y < logits.height; ++y)
    for (Index x = 0; x < logits.width; ++x) {
      const auto col = logits.data.col(logits.column(image, y, x));
      Index best = 0;
      for (Index c = 1; c < col.size(); ++c)
        if (col(c) > col(best)) best = c;
      out(y, x) = static_cast<std::int32_t>(best);
    }
  return out;
}

}  // namespace volcon

#endif  // VOLCON_MODELS_HPP_
