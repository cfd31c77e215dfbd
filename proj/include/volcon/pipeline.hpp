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
#ifndef VOLCON_PIPELINE_HPP_
#define VOLCON_PIPELINE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "volcon/augmentation.hpp"
#include "volcon/checkpoint.hpp"
#include "volcon/evaluation.hpp"
#include "volcon/models.hpp"
#include "volcon/training.hpp"
#include "volcon/volume.hpp"

namespace volcon {

struct DataConfig {
  std::string train_volume;
  std::string train_labels;
  std::vector<std::string> test_volumes;
  std::vector<std::string> test_labels;
  int num_splits = 3;
  std::string splits_file;          // empty: sequential splits
  std::string volume_labels_file;   // empty: computed from num_partitions
};

struct PretrainConfig {
  StageConfig stage;
  OptimizerConfig optimizer;
};

enum class EncoderInit { kPretrained, kRandom };
std::string to_string(EncoderInit init);
EncoderInit encoder_init_from_string(const std::string& s);

struct FinetuneConfig {
  StageConfig stage;
  OptimizerConfig optimizer;
  EncoderInit encoder_init = EncoderInit::kPretrained;
  std::string checkpoint;  // pretrain checkpoint; empty inside `run`
};

struct EvaluateConfig {
  std::string checkpoint;  // finetune checkpoint; empty inside `run`
};

/// Everything a run needs. One JSON document with a section per module.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string output_dir = "runs";
  DataConfig data;
  EncoderSpec encoder;
  ProjectionHeadSpec projection;
  SegmentationHeadSpec head;
  AugmentationPolicy augmentation;
  std::optional<double> normalization_mean;  // unset: computed from the training volume
  std::optional<double> normalization_std;
  PretrainConfig pretrain;
  FinetuneConfig finetune;
  EvaluateConfig evaluate;

  void validate() const;
};

/// Parses a config document. Missing keys take defaults (some depend on
/// the encoder family); unknown keys and type errors are ConfigErrors.
RunConfig run_config_from_json(const nlohmann::json& doc);
/// Fully resolved form with every default written out.
nlohmann::json to_json(const RunConfig& cfg);
/// Reads and parses a config file. An absent or malformed file is a ConfigError.
nlohmann::json read_config_document(const std::string& path);
/// Applies "dotted.key=value" to a config document. The value is parsed as
/// JSON when possible and taken as a string otherwise.
void apply_override(nlohmann::json& doc, const std::string& assignment);

struct TrainingData {
  SeismicVolume amplitude;
  std::optional<LabelVolume> labels;
  std::vector<CrossLineSlice> slices;
};

TrainingData load_training_data(const RunConfig& cfg, bool need_labels);
TrainingData make_training_data(SeismicVolume amplitude, std::optional<LabelVolume> labels);
std::vector<TestVolume> load_test_volumes(const RunConfig& cfg);

/// Fills unset normalization statistics from the training volume.
void resolve_normalization(RunConfig& cfg, const SeismicVolume& train);
AugmentationPolicy contrastive_policy(const RunConfig& cfg);
AugmentationPolicy finetune_policy(const RunConfig& cfg);

TrainResult run_pretrain(const RunConfig& cfg, const TrainingData& data,
                         const EpochCallback& on_epoch = {});
/// Uses `pretrained` unless the config asks for a random-init encoder.
TrainResult run_finetune(const RunConfig& cfg, const TrainingData& data,
                         const ModelCheckpoint* pretrained, const EpochCallback& on_epoch = {});
std::vector<SplitSpec> resolve_splits(const RunConfig& cfg, const std::vector<TestVolume>& volumes);
EvaluationResult run_evaluate(const RunConfig& cfg, const ModelCheckpoint& finetuned,
                              const std::vector<TestVolume>& volumes);

/// "Random init", "SimCLR" or "Volume Labels".
std::string method_name(const RunConfig& cfg);
/// One comparison-table row. Contains no paths or times so reruns compare equal.
nlohmann::json summary_row(const RunConfig& cfg, const EvaluationResult& result);
/// Plain-text table with method, N and MIOU columns.
std::string format_summary_table(const std::vector<nlohmann::json>& rows);

}  // namespace volcon

#endif  // VOLCON_PIPELINE_HPP_
