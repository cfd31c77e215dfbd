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
#include "volcon/pipeline.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include "volcon/errors.hpp"

namespace volcon {
namespace {

using json = nlohmann::json;

// Reads one JSON object section, remembering which keys were consumed so
// that leftovers can be reported.
class Section {
 public:
  Section(const json& doc, std::string path) : path_(std::move(path)) {
    if (doc.is_null()) {
      doc_ = json::object();
    } else if (!doc.is_object()) {
      throw ConfigError("'" + label() + "' must be an object");
    } else {
      doc_ = doc;
    }
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!doc_.contains(key) || doc_[key].is_null()) return;
    try {
      out = doc_[key].get<T>();
    } catch (const json::exception&) {
      throw ConfigError("'" + qualified(key) + "' has the wrong type");
    }
  }

  template <typename T>
  void get_optional(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!doc_.contains(key) || doc_[key].is_null()) return;
    T v{};
    get(key, v);
    out = v;
  }

  std::optional<std::string> get_string(const std::string& key) {
    std::optional<std::string> out;
    get_optional(key, out);
    return out;
  }

  Section child(const std::string& key) {
    seen_.insert(key);
    return Section(doc_.contains(key) ? doc_[key] : json(), qualified(key));
  }

  void finish() const {
    for (const auto& [key, value] : doc_.items())
      if (!seen_.count(key)) throw ConfigError("unknown config key '" + qualified(key) + "'");
  }

 private:
  std::string label() const { return path_.empty() ? "<root>" : path_; }
  std::string qualified(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  json doc_;
  std::string path_;
  std::set<std::string> seen_;
};

std::string to_string(LossReduction r) { return r == LossReduction::kMean ? "mean" : "sum"; }

LossReduction reduction_from_string(const std::string& s) {
  if (s == "mean") return LossReduction::kMean;
  if (s == "sum") return LossReduction::kSum;
  throw ConfigError("unknown reduction '" + s + "'");
}

void read_optimizer(Section s, OptimizerConfig& opt) {
  s.get("learning_rate", opt.learning_rate);
  s.get("momentum", opt.momentum);
  s.finish();
}

json optimizer_json(const OptimizerConfig& opt) {
  return {{"learning_rate", opt.learning_rate}, {"momentum", opt.momentum}};
}

json nullable(const std::optional<double>& v) { return v ? json(*v) : json(); }

}  // namespace

std::string to_string(EncoderInit init) {
  return init == EncoderInit::kPretrained ? "pretrained" : "random";
}

EncoderInit encoder_init_from_string(const std::string& s) {
  if (s == "pretrained") return EncoderInit::kPretrained;
  if (s == "random") return EncoderInit::kRandom;
  throw ConfigError("unknown encoder_init '" + s + "' (expected pretrained or random)");
}

void RunConfig::validate() const {
  encoder.validate();
  projection.validate();
  head.validate();
  if (projection.in_dim != encoder.feature_dim)
    throw ConfigError("model.projection.in_dim must equal model.encoder.feature_dim");
  if (head.in_channels != encoder.feature_dim)
    throw ConfigError("model.head.in_channels must equal model.encoder.feature_dim");
  AugmentationPolicy p = augmentation;
  p.mean = normalization_mean.value_or(0.0);
  p.std = normalization_std.value_or(1.0);
  p.validate();
  pretrain.stage.validate();
  finetune.stage.validate();
  if (data.num_splits < 1) throw ConfigError("data.num_splits must be >= 1");
  if (data.test_labels.size() != data.test_volumes.size())
    throw ConfigError("data.test_labels must pair with data.test_volumes");
  if (data.test_volumes.size() > 2) throw ConfigError("at most two test volumes are supported");
}

RunConfig run_config_from_json(const json& doc) {
  RunConfig cfg;
  Section root(doc, "");
  root.get("seed", cfg.seed);
  root.get("output_dir", cfg.output_dir);

  {
    Section s = root.child("data");
    s.get("train_volume", cfg.data.train_volume);
    s.get("train_labels", cfg.data.train_labels);
    s.get("test_volumes", cfg.data.test_volumes);
    s.get("test_labels", cfg.data.test_labels);
    s.get("num_splits", cfg.data.num_splits);
    s.get("splits_file", cfg.data.splits_file);
    s.get("volume_labels_file", cfg.data.volume_labels_file);
    s.finish();
  }

  {
    Section model = root.child("model");
    Section enc = model.child("encoder");
    if (auto family = enc.get_string("family")) {
      if (encoder_family_from_string(*family) == EncoderFamily::kTiny) cfg.encoder = EncoderSpec::tiny();
    }
    enc.get("input_channels", cfg.encoder.input_channels);
    enc.get("feature_dim", cfg.encoder.feature_dim);
    enc.get("output_stride", cfg.encoder.output_stride);
    enc.finish();

    cfg.projection.in_dim = cfg.encoder.feature_dim;
    cfg.projection.hidden_dim = cfg.encoder.feature_dim;
    Section proj = model.child("projection");
    proj.get("in_dim", cfg.projection.in_dim);
    proj.get("hidden_dim", cfg.projection.hidden_dim);
    proj.get("out_dim", cfg.projection.out_dim);
    proj.finish();

    Section head = model.child("head");
    int num_classes = SegmentationHeadSpec{}.num_classes;
    head.get("num_classes", num_classes);
    cfg.head = SegmentationHeadSpec::for_encoder(cfg.encoder, num_classes);
    if (auto kind = head.get_string("kind")) cfg.head.kind = head_kind_from_string(*kind);
    head.get("in_channels", cfg.head.in_channels);
    head.get("atrous_rates", cfg.head.atrous_rates);
    head.get("hidden_channels", cfg.head.hidden_channels);
    head.finish();
    model.finish();
  }

  {
    Section s = root.child("augmentation");
    s.get("crop_size", cfg.augmentation.crop_size);
    s.get("scale_min", cfg.augmentation.scale_min);
    s.get("scale_max", cfg.augmentation.scale_max);
    s.get("flip_probability", cfg.augmentation.flip_probability);
    s.get("brightness", cfg.augmentation.brightness);
    s.get("contrast", cfg.augmentation.contrast);
    s.get_optional("mean", cfg.normalization_mean);
    s.get_optional("std", cfg.normalization_std);
    s.finish();
  }

  {
    StageConfig& st = cfg.pretrain.stage;
    st.stage = "pretrain";
    Section s = root.child("pretrain");
    s.get("epochs", st.epochs);
    s.get("batch_size", st.batch_size);
    s.get("temperature", st.temperature);
    s.get_optional("num_partitions", st.num_partitions);
    if (auto v = s.get_string("pair_strategy")) st.pair_strategy = pair_strategy_from_string(*v);
    if (auto v = s.get_string("reduction")) st.reduction = reduction_from_string(*v);
    s.get("two_views", st.two_views);
    s.get("drop_last", st.drop_last);
    read_optimizer(s.child("optimizer"), cfg.pretrain.optimizer);
    s.finish();
    if (st.pair_strategy == PairStrategy::kVolumeLabels && !st.num_partitions)
      st.num_partitions = kDefaultNumPartitions;
  }

  {
    StageConfig& st = cfg.finetune.stage;
    st.stage = "finetune";
    Section s = root.child("finetune");
    s.get("epochs", st.epochs);
    s.get("batch_size", st.batch_size);
    s.get("drop_last", st.drop_last);
    if (auto v = s.get_string("encoder_init")) cfg.finetune.encoder_init = encoder_init_from_string(*v);
    s.get("checkpoint", cfg.finetune.checkpoint);
    read_optimizer(s.child("optimizer"), cfg.finetune.optimizer);
    s.finish();
  }

  {
    Section s = root.child("evaluate");
    s.get("checkpoint", cfg.evaluate.checkpoint);
    s.finish();
  }
  root.finish();

  cfg.pretrain.stage.seed = cfg.seed;
  cfg.finetune.stage.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

json to_json(const RunConfig& cfg) {
  const StageConfig& pt = cfg.pretrain.stage;
  const StageConfig& ft = cfg.finetune.stage;
  const AugmentationPolicy& a = cfg.augmentation;
  return {
      {"seed", cfg.seed},
      {"output_dir", cfg.output_dir},
      {"data",
       {{"train_volume", cfg.data.train_volume},
        {"train_labels", cfg.data.train_labels},
        {"test_volumes", cfg.data.test_volumes},
        {"test_labels", cfg.data.test_labels},
        {"num_splits", cfg.data.num_splits},
        {"splits_file", cfg.data.splits_file},
        {"volume_labels_file", cfg.data.volume_labels_file}}},
      {"model", {{"encoder", cfg.encoder}, {"projection", cfg.projection}, {"head", cfg.head}}},
      {"augmentation",
       {{"crop_size", a.crop_size},
        {"scale_min", a.scale_min},
        {"scale_max", a.scale_max},
        {"flip_probability", a.flip_probability},
        {"brightness", a.brightness},
        {"contrast", a.contrast},
        {"mean", nullable(cfg.normalization_mean)},
        {"std", nullable(cfg.normalization_std)}}},
      {"pretrain",
       {{"epochs", pt.epochs},
        {"batch_size", pt.batch_size},
        {"temperature", pt.temperature},
        {"num_partitions", pt.num_partitions ? json(*pt.num_partitions) : json()},
        {"pair_strategy", to_string(pt.pair_strategy)},
        {"reduction", to_string(pt.reduction)},
        {"two_views", pt.two_views},
        {"drop_last", pt.drop_last},
        {"optimizer", optimizer_json(cfg.pretrain.optimizer)}}},
      {"finetune",
       {{"epochs", ft.epochs},
        {"batch_size", ft.batch_size},
        {"drop_last", ft.drop_last},
        {"encoder_init", to_string(cfg.finetune.encoder_init)},
        {"checkpoint", cfg.finetune.checkpoint},
        {"optimizer", optimizer_json(cfg.finetune.optimizer)}}},
      {"evaluate", {{"checkpoint", cfg.evaluate.checkpoint}}}};
}

json read_config_document(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config '" + path + "' is not valid JSON: " + e.what());
  }
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "' must look like key.path=value");
  std::string pointer;
  std::stringstream keys(assignment.substr(0, eq));
  for (std::string part; std::getline(keys, part, '.');) pointer += "/" + part;
  const std::string text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  if (!doc.is_object()) doc = json::object();
  doc[json::json_pointer(pointer)] = value;
}

TrainingData make_training_data(SeismicVolume amplitude, std::optional<LabelVolume> labels) {
  TrainingData data;
  data.slices = labels ? extract_crosslines(amplitude, *labels) : extract_crosslines(amplitude);
  data.amplitude = std::move(amplitude);
  data.labels = std::move(labels);
  return data;
}

TrainingData load_training_data(const RunConfig& cfg, bool need_labels) {
  if (cfg.data.train_volume.empty()) throw ConfigError("data.train_volume is not set");
  if (!std::filesystem::exists(cfg.data.train_volume))
    throw MissingArtifactError("training volume '" + cfg.data.train_volume + "'");
  std::optional<LabelVolume> labels;
  if (need_labels) {
    if (cfg.data.train_labels.empty()) throw ConfigError("data.train_labels is not set");
    if (!std::filesystem::exists(cfg.data.train_labels))
      throw MissingArtifactError("training labels '" + cfg.data.train_labels + "'");
    labels = load_label_volume(cfg.data.train_labels);
  }
  return make_training_data(load_seismic_volume(cfg.data.train_volume), std::move(labels));
}

std::vector<TestVolume> load_test_volumes(const RunConfig& cfg) {
  if (cfg.data.test_volumes.empty()) throw ConfigError("data.test_volumes is empty");
  std::vector<TestVolume> out;
  for (std::size_t i = 0; i < cfg.data.test_volumes.size(); ++i) {
    for (const auto* p : {&cfg.data.test_volumes[i], &cfg.data.test_labels[i]})
      if (!std::filesystem::exists(*p)) throw MissingArtifactError("test data '" + *p + "'");
    TestVolume v{load_seismic_volume(cfg.data.test_volumes[i]), load_label_volume(cfg.data.test_labels[i])};
    if (!(v.amplitude.dims == v.labels.dims))
      throw DataError("test volume " + std::to_string(i) + " and its labels differ in shape");
    out.push_back(std::move(v));
  }
  return out;
}

void resolve_normalization(RunConfig& cfg, const SeismicVolume& train) {
  if (cfg.normalization_mean && cfg.normalization_std) return;
  const NormalizationStats stats = compute_normalization_stats(train);
  if (!cfg.normalization_mean) cfg.normalization_mean = stats.mean;
  if (!cfg.normalization_std) cfg.normalization_std = stats.std;
}

AugmentationPolicy contrastive_policy(const RunConfig& cfg) {
  if (!cfg.normalization_mean || !cfg.normalization_std)
    throw ConfigError("normalization statistics are unresolved");
  AugmentationPolicy p = cfg.augmentation;
  p.mode = AugmentationMode::kContrastive;
  p.mean = *cfg.normalization_mean;
  p.std = *cfg.normalization_std;
  return p;
}

AugmentationPolicy finetune_policy(const RunConfig& cfg) {
  return contrastive_policy(cfg).with_mode(AugmentationMode::kFinetune);
}

TrainResult run_pretrain(const RunConfig& cfg, const TrainingData& data,
                         const EpochCallback& on_epoch) {
  std::optional<VolumeLabelAssignment> assignment;
  if (!cfg.data.volume_labels_file.empty()) {
    std::ifstream in(cfg.data.volume_labels_file);
    if (!in) throw MissingArtifactError("volume label file '" + cfg.data.volume_labels_file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    assignment = assignment_from_json(ss.str());
  }
  return pretrain_contrastive(data.slices, assignment ? &*assignment : nullptr, cfg.pretrain.stage,
                              cfg.pretrain.optimizer, contrastive_policy(cfg), cfg.encoder,
                              cfg.projection, on_epoch);
}

TrainResult run_finetune(const RunConfig& cfg, const TrainingData& data,
                         const ModelCheckpoint* pretrained, const EpochCallback& on_epoch) {
  const AugmentationPolicy policy = finetune_policy(cfg);
  if (cfg.finetune.encoder_init == EncoderInit::kRandom) {
    const ModelCheckpoint random = make_random_init_checkpoint(cfg.encoder, cfg.projection, cfg.seed,
                                                               {policy.mean, policy.std});
    return finetune_segmentation(data.slices, random, cfg.finetune.stage, cfg.finetune.optimizer,
                                 policy, cfg.head, on_epoch);
  }
  if (pretrained == nullptr) throw MissingArtifactError("pretrain checkpoint");
  return finetune_segmentation(data.slices, *pretrained, cfg.finetune.stage, cfg.finetune.optimizer,
                               policy, cfg.head, on_epoch);
}

std::vector<SplitSpec> resolve_splits(const RunConfig& cfg, const std::vector<TestVolume>& volumes) {
  if (!cfg.data.splits_file.empty()) {
    std::ifstream in(cfg.data.splits_file);
    if (!in) throw MissingArtifactError("splits file '" + cfg.data.splits_file + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return splits_from_json(ss.str());
  }
  const Index c1 = volumes.at(0).amplitude.dims.crosslines;
  const Index c2 = volumes.size() > 1 ? volumes[1].amplitude.dims.crosslines : 0;
  return build_test_splits(c1, c2, cfg.data.num_splits);
}

EvaluationResult run_evaluate(const RunConfig& cfg, const ModelCheckpoint& finetuned,
                              const std::vector<TestVolume>& volumes) {
  SegmentationModel model = SegmentationModel::from_checkpoint(finetuned);
  return evaluate_splits(model, volumes, resolve_splits(cfg, volumes));
}

std::string method_name(const RunConfig& cfg) {
  if (cfg.finetune.encoder_init == EncoderInit::kRandom) return "Random init";
  return cfg.pretrain.stage.pair_strategy == PairStrategy::kSimclr ? "SimCLR" : "Volume Labels";
}

json summary_row(const RunConfig& cfg, const EvaluationResult& result) {
  const bool uses_n = cfg.finetune.encoder_init == EncoderInit::kPretrained &&
                      cfg.pretrain.stage.pair_strategy == PairStrategy::kVolumeLabels;
  json splits = json::array();
  for (const auto& s : result.splits) splits.push_back(s.miou);
  return {{"method", method_name(cfg)},
          {"num_partitions", uses_n ? json(*cfg.pretrain.stage.num_partitions) : json()},
          {"encoder", to_string(cfg.encoder.family)},
          {"seed", cfg.seed},
          {"split_miou", splits},
          {"average_miou", result.average_miou}};
}

std::string format_summary_table(const std::vector<json>& rows) {
  std::ostringstream os;
  os << std::left << std::setw(16) << "Method" << std::setw(8) << "N" << "MIOU\n";
  for (const auto& r : rows) {
    const std::string n = r.at("num_partitions").is_null() ? "-" : r.at("num_partitions").dump();
    os << std::left << std::setw(16) << r.at("method").get<std::string>() << std::setw(8) << n
       << std::fixed << std::setprecision(4) << r.at("average_miou").get<double>() << "\n";
  }
  return os.str();
}

}  // namespace volcon
