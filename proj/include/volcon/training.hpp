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
#ifndef VOLCON_TRAINING_HPP_
#define VOLCON_TRAINING_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "volcon/augmentation.hpp"
#include "volcon/checkpoint.hpp"
#include "volcon/contrastive_loss.hpp"
#include "volcon/evaluation.hpp"
#include "volcon/models.hpp"
#include "volcon/volume.hpp"

namespace volcon {

struct OptimizerConfig {
  double learning_rate = 0.001;
  double momentum = 0.9;

  void validate() const;
};

/// Classical momentum SGD without weight decay:
///   v <- momentum * v + g;   p <- p - lr * v.
/// Parameters that are buffers or frozen are skipped.
template <typename Scalar>
class Sgd {
 public:
  explicit Sgd(const OptimizerConfig& cfg) : cfg_(cfg) { cfg_.validate(); }

  void step(nn::ParameterSet<Scalar>& params) {
    const Scalar lr = static_cast<Scalar>(cfg_.learning_rate);
    const Scalar mu = static_cast<Scalar>(cfg_.momentum);
    for (auto& [name, p] : params.entries()) {
      if (!p.trainable || p.buffer) continue;
      auto it = velocity_.find(name);
      if (it == velocity_.end())
        it = velocity_.emplace(name, nn::Matrix<Scalar>::Zero(p.value.rows(), p.value.cols())).first;
      it->second = mu * it->second + p.grad;
      p.value -= lr * it->second;
    }
  }

  const OptimizerConfig& config() const { return cfg_; }

 private:
  OptimizerConfig cfg_;
  std::map<std::string, nn::Matrix<Scalar>> velocity_;
};

inline constexpr Index kDefaultNumPartitions = 150;

enum class PairStrategy { kVolumeLabels, kSimclr };
std::string to_string(PairStrategy s);
PairStrategy pair_strategy_from_string(const std::string& s);

struct StageConfig {
  std::string stage = "pretrain";
  int epochs = 50;
  int batch_size = 64;
  double temperature = kDefaultTemperature;
  // Unset means kDefaultNumPartitions for volume labels; ignored by simclr.
  std::optional<Index> num_partitions;
  PairStrategy pair_strategy = PairStrategy::kVolumeLabels;
  std::uint64_t seed = 0;
  bool two_views = true;
  bool drop_last = false;
  LossReduction reduction = LossReduction::kMean;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  std::optional<double> mean_loss;  // empty when every batch was skipped
  double wall_seconds = 0.0;
  Index anchors_skipped = 0;
  Index batches_skipped = 0;
};

struct TrainLog {
  std::vector<EpochRecord> records;
  std::string checkpoint;  // path, filled in by the caller once persisted
  std::vector<std::string> warnings;
};

/// Called after every epoch; used for progress reporting.
using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  ModelCheckpoint checkpoint;
  TrainLog log;
};

/// Mean over pixels of -log softmax(logits)[target]. targets are ordered
/// like the logits' pixels (image, row, column). When dlogits is given it
/// receives d(loss)/d(logits).
template <typename Scalar>
Scalar pixel_cross_entropy(const FeatureMap<Scalar>& logits, std::span<const std::int32_t> targets,
                           FeatureMap<Scalar>* dlogits = nullptr) {
  const Index p = logits.pixels(), c = logits.channels;
  if (static_cast<Index>(targets.size()) != p)
    throw DataError("target count does not match logits");
  for (auto t : targets)
    if (t < 0 || t >= c) throw DataError("target class " + std::to_string(t) + " outside [0, " +
                                         std::to_string(c) + ")");
  if (dlogits != nullptr) *dlogits = FeatureMap<Scalar>(logits.batch, logits.height, logits.width, c);
  double total = 0.0;
  for (Index j = 0; j < p; ++j) {
    const auto col = logits.data.col(j);
    const Scalar m = col.maxCoeff();
    const Eigen::Array<Scalar, Eigen::Dynamic, 1> shifted = (col.array() - m).exp();
    const Scalar sum = shifted.sum();
    const auto t = targets[static_cast<std::size_t>(j)];
    total += static_cast<double>(std::log(sum) + m - col(t));
    if (dlogits != nullptr) {
      auto g = dlogits->data.col(j);
      g = shifted.matrix() / sum;
      g(t) -= Scalar(1);
      g /= static_cast<Scalar>(p);
    }
  }
  return static_cast<Scalar>(total / static_cast<double>(p));
}

/// Stage one: contrastive pretraining of encoder and projection head.
/// With PairStrategy::kVolumeLabels rows are labelled by `assignment` (or,
/// when null, by assign_volume_labels(slices.size(), num_partitions));
/// with kSimclr by their source slice. Slices are indexed by position.
TrainResult pretrain_contrastive(const std::vector<CrossLineSlice>& slices,
                                 const VolumeLabelAssignment* assignment, const StageConfig& stage,
                                 const OptimizerConfig& optimizer, const AugmentationPolicy& policy,
                                 const EncoderSpec& encoder_spec,
                                 const ProjectionHeadSpec& projection_spec,
                                 const EpochCallback& on_epoch = {});

/// A stage-one checkpoint holding freshly initialised weights; used as the
/// random-initialization baseline.
ModelCheckpoint make_random_init_checkpoint(const EncoderSpec& encoder_spec,
                                            const ProjectionHeadSpec& projection_spec,
                                            std::uint64_t seed, const NormalizationStats& norm);

/// Stage two: trains a segmentation head on the frozen encoder with pixel
/// cross-entropy. Slices must carry masks.
TrainResult finetune_segmentation(const std::vector<CrossLineSlice>& slices,
                                  const ModelCheckpoint& pretrained, const StageConfig& stage,
                                  const OptimizerConfig& optimizer, const AugmentationPolicy& policy,
                                  const SegmentationHeadSpec& head_spec,
                                  const EpochCallback& on_epoch = {});

/// Encoder, head and normalization restored from a fine-tune checkpoint.
class SegmentationModel {
 public:
  SegmentationModel(Encoder<float> encoder, SegmentationHead<float> head, NormalizationStats norm);
  static SegmentationModel from_checkpoint(const ModelCheckpoint& ckpt);

  /// Normalizes, reflect-pads and encodes one raw slice (eval mode).
  FeatureMap<float> encode(const Image& raw);
  /// Per-pixel class map at the slice's own size.
  LabelImage predict(const Image& raw);

  Encoder<float>& encoder() { return encoder_; }
  SegmentationHead<float>& head() { return head_; }
  const NormalizationStats& normalization() const { return norm_; }

 private:
  Encoder<float> encoder_;
  SegmentationHead<float> head_;
  NormalizationStats norm_;
};

Encoder<float> encoder_from_checkpoint(const ModelCheckpoint& ckpt);
NormalizationStats normalization_from_checkpoint(const ModelCheckpoint& ckpt);

EvaluationResult evaluate_splits(SegmentationModel& model, const std::vector<TestVolume>& volumes,
                                 const std::vector<SplitSpec>& splits);

void to_json(nlohmann::json& j, const EpochRecord& r);
/// One JSON object per line, one line per epoch.
std::string train_log_to_jsonl(const TrainLog& log);
TrainLog train_log_from_jsonl(const std::string& text);

/// Worker count from VOLCON_NUM_WORKERS (default 1, minimum 1).
int num_workers_from_env();

}  // namespace volcon

#endif  // VOLCON_TRAINING_HPP_
