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
#include "volcon/training.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "volcon/errors.hpp"

namespace volcon {
namespace {

using json = nlohmann::json;

// Stream tags for derive_rng.
enum : std::uint64_t { kInitStream = 1, kShuffleStream = 2, kAugmentStream = 3, kHeadStream = 4 };

// Runs fn(i) for i in [0, n). Results must be written to per-index slots so
// the outcome is independent of the worker count.
template <typename Fn>
void parallel_for(Index n, int workers, Fn&& fn) {
  if (workers <= 1 || n < 2) {
    for (Index i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<Index> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto run = [&] {
    for (Index i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int count = static_cast<int>(std::min<Index>(workers, n));
  for (int w = 0; w < count; ++w) pool.emplace_back(run);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<Index> shuffled_order(Index n, std::uint64_t seed, int epoch) {
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index(0));
  Rng rng = derive_rng(seed, {kShuffleStream, static_cast<std::uint64_t>(epoch)});
  std::shuffle(order.begin(), order.end(), rng);
  return order;
}

std::vector<std::pair<Index, Index>> batch_ranges(Index n, Index batch, bool drop_last) {
  std::vector<std::pair<Index, Index>> out;
  for (Index b = 0; b < n; b += batch) {
    const Index e = std::min(n, b + batch);
    if (drop_last && e - b < batch) break;
    out.emplace_back(b, e);
  }
  return out;
}

bool has_positive_pair(const std::vector<int>& labels) {
  std::vector<int> sorted = labels;
  std::sort(sorted.begin(), sorted.end());
  return std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end();
}

FeatureMap<float> concat_batch(const std::vector<const FeatureMap<float>*>& maps) {
  const auto& first = *maps.front();
  FeatureMap<float> out(static_cast<Index>(maps.size()), first.height, first.width, first.channels);
  const Index per = first.pixels();
  for (std::size_t i = 0; i < maps.size(); ++i) {
    if (!maps[i]->same_shape(first)) throw DataError("slices in a batch differ in shape");
    out.data.middleCols(static_cast<Index>(i) * per, per) = maps[i]->data;
  }
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

json norm_json(const NormalizationStats& n) { return {{"mean", n.mean}, {"std", n.std}}; }

}  // namespace

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("momentum must be in [0, 1)");
}

std::string to_string(PairStrategy s) {
  return s == PairStrategy::kVolumeLabels ? "volume_labels" : "simclr";
}

PairStrategy pair_strategy_from_string(const std::string& s) {
  if (s == "volume_labels") return PairStrategy::kVolumeLabels;
  if (s == "simclr") return PairStrategy::kSimclr;
  throw ConfigError("unknown pair_strategy '" + s + "'");
}

void StageConfig::validate() const {
  if (stage != "pretrain" && stage != "finetune") throw ConfigError("unknown stage '" + stage + "'");
  if (epochs < 1) throw ConfigError("epochs must be >= 1, got " + std::to_string(epochs));
  if (batch_size < 2) throw ConfigError("batch_size must be >= 2, got " + std::to_string(batch_size));
  if (stage == "pretrain") {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be > 0");
    if (num_partitions && *num_partitions < 1) throw ConfigError("num_partitions must be >= 1");
    if (pair_strategy == PairStrategy::kSimclr && !two_views)
      throw ConfigError("simclr pairing needs two views per slice");
  }
}

int num_workers_from_env() {
  const char* v = std::getenv("VOLCON_NUM_WORKERS");
  if (v == nullptr) return 1;
  try {
    return std::max(1, std::stoi(v));
  } catch (const std::exception&) {
    throw ConfigError(std::string("VOLCON_NUM_WORKERS is not an integer: ") + v);
  }
}

TrainResult pretrain_contrastive(const std::vector<CrossLineSlice>& slices,
                                 const VolumeLabelAssignment* assignment, const StageConfig& stage,
                                 const OptimizerConfig& optimizer, const AugmentationPolicy& policy,
                                 const EncoderSpec& encoder_spec,
                                 const ProjectionHeadSpec& projection_spec,
                                 const EpochCallback& on_epoch) {
  stage.validate();
  policy.validate();
  if (policy.mode != AugmentationMode::kContrastive)
    throw ConfigError("pretraining needs a contrastive augmentation policy");
  if (projection_spec.in_dim != encoder_spec.feature_dim)
    throw ConfigError("projection in_dim must equal encoder feature_dim");
  const Index n = static_cast<Index>(slices.size());
  if (n < 1) throw DataError("no training slices");

  TrainResult result;
  std::vector<int> volume_labels;
  if (stage.pair_strategy == PairStrategy::kVolumeLabels) {
    const VolumeLabelAssignment owned =
        assignment != nullptr ? *assignment : assign_volume_labels(n, stage.num_partitions.value_or(kDefaultNumPartitions));
    if (owned.num_slices != n) throw ConfigError("label assignment does not cover the slices");
    volume_labels = owned.labels;
  } else if (assignment != nullptr || stage.num_partitions) {
    result.log.warnings.push_back("pair_strategy simclr ignores num_partitions");
  }

  Rng init_rng = derive_rng(stage.seed, {kInitStream});
  Encoder<float> encoder(encoder_spec, init_rng);
  ProjectionHead<float> projection(projection_spec, init_rng);
  Sgd<float> sgd(optimizer);
  const int workers = num_workers_from_env();
  const int views = stage.two_views ? 2 : 1;

  Index batches_used_total = 0;
  for (int epoch = 1; epoch <= stage.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = shuffled_order(n, stage.seed, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    Index batches_used = 0;
    for (const auto& [begin, end] : batch_ranges(n, stage.batch_size, stage.drop_last)) {
      const Index bs = end - begin;
      const Index rows = bs * views;
      std::vector<int> labels(static_cast<std::size_t>(rows));
      for (Index j = 0; j < bs; ++j) {
        const Index src = order[static_cast<std::size_t>(begin + j)];
        const int label = stage.pair_strategy == PairStrategy::kVolumeLabels
                              ? volume_labels[static_cast<std::size_t>(src)]
                              : static_cast<int>(j);
        for (int v = 0; v < views; ++v) labels[static_cast<std::size_t>(j * views + v)] = label;
      }
      if (!has_positive_pair(labels)) {
        ++rec.batches_skipped;
        rec.anchors_skipped += rows;
        continue;
      }

      std::vector<Image> images(static_cast<std::size_t>(rows));
      parallel_for(bs, workers, [&](Index j) {
        const Index src = order[static_cast<std::size_t>(begin + j)];
        Rng rng = derive_rng(stage.seed, {kAugmentStream, static_cast<std::uint64_t>(epoch),
                                          static_cast<std::uint64_t>(src)});
        const auto& slice = slices[static_cast<std::size_t>(src)];
        if (views == 2) {
          ViewPair pair = make_view_pair(slice, policy, rng);
          images[static_cast<std::size_t>(2 * j)] = std::move(pair.view_a);
          images[static_cast<std::size_t>(2 * j + 1)] = std::move(pair.view_b);
        } else {
          images[static_cast<std::size_t>(j)] = apply_policy(slice.image, policy, rng);
        }
      });
      std::vector<const Image*> ptrs;
      for (const auto& im : images) ptrs.push_back(&im);

      encoder.parameters().zero_grad();
      projection.parameters().zero_grad();
      auto out = encoder.forward(make_image_batch<float>(ptrs, encoder_spec.input_channels), Mode::kTrain);
      const nn::Matrix<float> z = projection.forward(out.pooled, Mode::kTrain);

      EmbeddingBatch<double> batch{z.cast<double>(), labels, stage.temperature, stage.reduction};
      LossResult<double> loss;
      try {
        loss = supcon_loss(batch, 1e-4);
      } catch (const DegenerateBatchError&) {
        ++rec.batches_skipped;
        rec.anchors_skipped += rows;
        continue;
      }
      rec.anchors_skipped += loss.num_anchors_skipped;
      const nn::Matrix<float> dz = supcon_gradient(batch, 1e-4).cast<float>();
      encoder.backward(projection.backward(dz));
      sgd.step(encoder.parameters());
      sgd.step(projection.parameters());
      loss_sum += loss.value;
      ++batches_used;
    }
    if (batches_used > 0) rec.mean_loss = loss_sum / static_cast<double>(batches_used);
    batches_used_total += batches_used;
    rec.wall_seconds = seconds_since(t0);
    result.log.records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  if (batches_used_total == 0)
    throw TrainingError("every contrastive batch lacked positive pairs; use a larger batch, "
                        "fewer partitions (smaller N) or two views per slice");
  if (projection.guard_count() > 0)
    result.log.warnings.push_back("projection normalization guard triggered " +
                                  std::to_string(projection.guard_count()) + " times");

  ModelCheckpoint& ckpt = result.checkpoint;
  ckpt.stage = "pretrain";
  ckpt.epoch = stage.epochs;
  ckpt.seed = stage.seed;
  ckpt.specs = {{"encoder", encoder_spec}, {"projection", projection_spec}};
  export_parameters(encoder.parameters(), ckpt);
  export_parameters(projection.parameters(), ckpt);
  ckpt.extra = {{"normalization", norm_json({policy.mean, policy.std})},
                {"pair_strategy", to_string(stage.pair_strategy)},
                {"num_partitions", stage.pair_strategy == PairStrategy::kVolumeLabels
                                       ? json(volume_labels.empty() ? 0 : volume_labels.back() + 1)
                                       : json()},
                {"init", "contrastive"},
                {"temperature", stage.temperature},
                {"two_views", stage.two_views},
                {"augmentation", policy}};
  const auto& last = result.log.records.back();
  ckpt.metrics = {{"final_loss", last.mean_loss ? json(*last.mean_loss) : json()}};
  return result;
}

ModelCheckpoint make_random_init_checkpoint(const EncoderSpec& encoder_spec,
                                            const ProjectionHeadSpec& projection_spec,
                                            std::uint64_t seed, const NormalizationStats& norm) {
  Rng init_rng = derive_rng(seed, {kInitStream});
  Encoder<float> encoder(encoder_spec, init_rng);
  ProjectionHead<float> projection(projection_spec, init_rng);
  ModelCheckpoint ckpt;
  ckpt.stage = "pretrain";
  ckpt.epoch = 0;
  ckpt.seed = seed;
  ckpt.specs = {{"encoder", encoder_spec}, {"projection", projection_spec}};
  export_parameters(encoder.parameters(), ckpt);
  export_parameters(projection.parameters(), ckpt);
  ckpt.extra = {{"normalization", norm_json(norm)}, {"pair_strategy", json()},
                {"num_partitions", json()}, {"init", "random"}};
  return ckpt;
}

Encoder<float> encoder_from_checkpoint(const ModelCheckpoint& ckpt) {
  if (!ckpt.specs.contains("encoder")) throw ConfigError("incompatible checkpoint: no encoder spec");
  EncoderSpec spec;
  try {
    spec = ckpt.specs.at("encoder").get<EncoderSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("incompatible checkpoint: ") + e.what());
  }
  Rng unused(0);
  Encoder<float> encoder(spec, unused);
  import_parameters(encoder.parameters(), ckpt);
  return encoder;
}

NormalizationStats normalization_from_checkpoint(const ModelCheckpoint& ckpt) {
  try {
    const auto& n = ckpt.extra.at("normalization");
    return {n.at("mean").get<double>(), n.at("std").get<double>()};
  } catch (const nlohmann::json::exception&) {
    throw ConfigError("checkpoint lacks normalization statistics");
  }
}

TrainResult finetune_segmentation(const std::vector<CrossLineSlice>& slices,
                                  const ModelCheckpoint& pretrained, const StageConfig& stage,
                                  const OptimizerConfig& optimizer, const AugmentationPolicy& policy,
                                  const SegmentationHeadSpec& head_spec,
                                  const EpochCallback& on_epoch) {
  stage.validate();
  policy.validate();
  if (policy.mode == AugmentationMode::kContrastive)
    throw ConfigError("fine-tuning uses normalization-only augmentation");
  if (pretrained.stage != "pretrain")
    throw ConfigError("fine-tuning needs a pretrain-stage checkpoint, got '" + pretrained.stage + "'");
  if (slices.empty()) throw DataError("no training slices");

  Encoder<float> encoder = encoder_from_checkpoint(pretrained);
  freeze_encoder(encoder);
  const EncoderSpec& enc_spec = encoder.spec();
  if (head_spec.in_channels != enc_spec.feature_dim)
    throw ConfigError("head in_channels must equal encoder feature_dim");
  Rng head_rng = derive_rng(stage.seed, {kHeadStream});
  SegmentationHead<float> head(head_spec, head_rng);
  Sgd<float> sgd(optimizer);

  // The encoder is frozen and augmentation is deterministic, so features are
  // computed once.
  const Index n = static_cast<Index>(slices.size());
  std::vector<FeatureMap<float>> features(static_cast<std::size_t>(n));
  std::vector<LabelImage> targets(static_cast<std::size_t>(n));
  Index padded_h = 0, padded_w = 0, h = 0, w = 0;
  for (Index i = 0; i < n; ++i) {
    const auto& s = slices[static_cast<std::size_t>(i)];
    if (!s.mask) throw DataError("fine-tuning slices need masks");
    for (Index k = 0; k < s.mask->size(); ++k)
      if ((*s.mask)(k) < 0 || (*s.mask)(k) >= head_spec.num_classes)
        throw DataError("mask class outside [0, " + std::to_string(head_spec.num_classes) + ")");
    Rng unused(0);
    const Image normalized = apply_policy(s.image, policy, unused);
    const Image padded = reflect_pad_to_multiple(normalized, enc_spec.output_stride);
    if (i == 0) {
      h = s.image.rows();
      w = s.image.cols();
      padded_h = padded.rows();
      padded_w = padded.cols();
    } else if (s.image.rows() != h || s.image.cols() != w) {
      throw DataError("training slices differ in shape");
    }
    const Image* p = &padded;
    features[static_cast<std::size_t>(i)] =
        encoder.forward(make_image_batch<float>({p}, enc_spec.input_channels), Mode::kEval).features;
    targets[static_cast<std::size_t>(i)] = *s.mask;
  }

  auto gather_targets = [&](const std::vector<Index>& ids) {
    std::vector<std::int32_t> t;
    t.reserve(static_cast<std::size_t>(ids.size() * h * w));
    for (Index id : ids) {
      const auto& m = targets[static_cast<std::size_t>(id)];
      for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x) t.push_back(m(y, x));
    }
    return t;
  };

  TrainResult result;
  for (int epoch = 1; epoch <= stage.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto order = shuffled_order(n, stage.seed, epoch);
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    Index batches = 0;
    for (const auto& [begin, end] : batch_ranges(n, stage.batch_size, stage.drop_last)) {
      std::vector<Index> ids(order.begin() + begin, order.begin() + end);
      std::vector<const FeatureMap<float>*> maps;
      for (Index id : ids) maps.push_back(&features[static_cast<std::size_t>(id)]);
      head.parameters().zero_grad();
      const FeatureMap<float> logits =
          nn::crop(head.forward(concat_batch(maps), padded_h, padded_w, Mode::kTrain), h, w);
      const auto t = gather_targets(ids);
      FeatureMap<float> dlogits;
      const float loss = pixel_cross_entropy<float>(logits, t, &dlogits);
      head.backward(nn::crop_backward(dlogits, padded_h, padded_w));
      sgd.step(head.parameters());
      loss_sum += loss;
      ++batches;
    }
    if (batches > 0) rec.mean_loss = loss_sum / static_cast<double>(batches);
    rec.wall_seconds = seconds_since(t0);
    result.log.records.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }

  ConfusionMatrix cm(head_spec.num_classes);
  for (Index i = 0; i < n; ++i) {
    const FeatureMap<float> logits =
        nn::crop(head.forward(features[static_cast<std::size_t>(i)], padded_h, padded_w, Mode::kEval), h, w);
    cm.update(predict_labels(logits, 0), targets[static_cast<std::size_t>(i)]);
  }
  const double accuracy =
      static_cast<double>(cm.counts().diagonal().sum()) / static_cast<double>(cm.total());

  ModelCheckpoint& ckpt = result.checkpoint;
  ckpt.stage = "finetune";
  ckpt.epoch = stage.epochs;
  ckpt.seed = stage.seed;
  ckpt.specs = {{"encoder", enc_spec}, {"head", head_spec}};
  // Encoder tensors are copied from the source checkpoint, never re-exported.
  for (const auto& [name, m] : pretrained.tensors)
    if (name.rfind("encoder.", 0) == 0) ckpt.tensors.emplace(name, m);
  export_parameters(head.parameters(), ckpt);
  ckpt.extra = pretrained.extra;
  ckpt.extra["normalization"] = norm_json({policy.mean, policy.std});
  ckpt.extra["pretrain_epoch"] = pretrained.epoch;
  ckpt.extra["pretrain_seed"] = pretrained.seed;
  const auto& last = result.log.records.back();
  ckpt.metrics = {{"final_loss", last.mean_loss ? json(*last.mean_loss) : json()},
                  {"train_pixel_accuracy", accuracy},
                  {"train_miou", cm.miou()}};
  return result;
}

SegmentationModel::SegmentationModel(Encoder<float> encoder, SegmentationHead<float> head,
                                     NormalizationStats norm)
    : encoder_(std::move(encoder)), head_(std::move(head)), norm_(norm) {
  if (head_.spec().in_channels != encoder_.spec().feature_dim)
    throw ConfigError("head in_channels must equal encoder feature_dim");
}

SegmentationModel SegmentationModel::from_checkpoint(const ModelCheckpoint& ckpt) {
  if (ckpt.stage != "finetune")
    throw ConfigError("evaluation needs a finetune-stage checkpoint, got '" + ckpt.stage + "'");
  Encoder<float> encoder = encoder_from_checkpoint(ckpt);
  SegmentationHeadSpec hspec;
  try {
    hspec = ckpt.specs.at("head").get<SegmentationHeadSpec>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("incompatible checkpoint: ") + e.what());
  }
  Rng unused(0);
  SegmentationHead<float> head(hspec, unused);
  import_parameters(head.parameters(), ckpt);
  return SegmentationModel(std::move(encoder), std::move(head), normalization_from_checkpoint(ckpt));
}

FeatureMap<float> SegmentationModel::encode(const Image& raw) {
  const Image padded =
      reflect_pad_to_multiple(normalize(raw, norm_.mean, norm_.std), encoder_.spec().output_stride);
  const Image* p = &padded;
  return encoder_.forward(make_image_batch<float>({p}, encoder_.spec().input_channels), Mode::kEval)
      .features;
}

LabelImage SegmentationModel::predict(const Image& raw) {
  const Index os = encoder_.spec().output_stride;
  const Index ph = (raw.rows() + os - 1) / os * os, pw = (raw.cols() + os - 1) / os * os;
  const FeatureMap<float> logits = nn::crop(head_.forward(encode(raw), ph, pw, Mode::kEval), raw.rows(), raw.cols());
  return predict_labels(logits, 0);
}

EvaluationResult evaluate_splits(SegmentationModel& model, const std::vector<TestVolume>& volumes,
                                 const std::vector<SplitSpec>& splits) {
  int num_classes = model.head().spec().num_classes;
  for (const auto& v : volumes) num_classes = std::max(num_classes, v.labels.num_classes);
  return evaluate_splits(volumes, splits, num_classes,
                         [&model](const CrossLineSlice& s) { return model.predict(s.image); });
}

void to_json(nlohmann::json& j, const EpochRecord& r) {
  j = {{"epoch", r.epoch},
       {"mean_loss", r.mean_loss ? json(*r.mean_loss) : json()},
       {"wall_seconds", r.wall_seconds},
       {"anchors_skipped", r.anchors_skipped},
       {"batches_skipped", r.batches_skipped}};
}

std::string train_log_to_jsonl(const TrainLog& log) {
  std::ostringstream os;
  for (const auto& r : log.records) os << json(r).dump() << "\n";
  return os.str();
}

TrainLog train_log_from_jsonl(const std::string& text) {
  TrainLog log;
  std::istringstream is(text);
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      EpochRecord r;
      r.epoch = j.at("epoch").get<int>();
      if (!j.at("mean_loss").is_null()) r.mean_loss = j.at("mean_loss").get<double>();
      r.wall_seconds = j.at("wall_seconds").get<double>();
      r.anchors_skipped = j.at("anchors_skipped").get<Index>();
      r.batches_skipped = j.at("batches_skipped").get<Index>();
      log.records.push_back(r);
    } catch (const json::exception& e) {
      throw FormatError(std::string("bad train log line: ") + e.what());
    }
  }
  return log;
}

}  // namespace volcon
