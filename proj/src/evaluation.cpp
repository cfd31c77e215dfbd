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
#include "volcon/evaluation.hpp"

#include "volcon/errors.hpp"

namespace volcon {

ConfusionMatrix::ConfusionMatrix(int num_classes) {
  if (num_classes < 1) throw ConfigError("confusion matrix needs at least one class");
  counts_ = CountMatrix::Zero(num_classes, num_classes);
}

void ConfusionMatrix::update(const LabelImage& predictions, const LabelImage& targets) {
  if (predictions.rows() != targets.rows() || predictions.cols() != targets.cols())
    throw DataError("prediction and target shapes differ");
  const int c = num_classes();
  const auto in_range = [c](const LabelImage& m) {
    return m.size() == 0 || (m.minCoeff() >= 0 && m.maxCoeff() < c);
  };
  if (!in_range(predictions) || !in_range(targets))
    throw DataError("class index outside [0, " + std::to_string(c) + ")");
  for (Eigen::Index j = 0; j < targets.cols(); ++j)
    for (Eigen::Index i = 0; i < targets.rows(); ++i) ++counts_(targets(i, j), predictions(i, j));
}

void ConfusionMatrix::merge(const ConfusionMatrix& other) {
  if (other.num_classes() != num_classes()) throw DataError("class counts differ");
  counts_ += other.counts_;
}

std::optional<double> ConfusionMatrix::class_iou(int c) const {
  if (c < 0 || c >= num_classes()) throw ConfigError("class index out of range");
  const std::int64_t inter = counts_(c, c);
  const std::int64_t uni = counts_.row(c).sum() + counts_.col(c).sum() - inter;
  if (uni == 0) return std::nullopt;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

std::vector<std::optional<double>> ConfusionMatrix::per_class_iou() const {
  std::vector<std::optional<double>> out;
  for (int c = 0; c < num_classes(); ++c) out.push_back(class_iou(c));
  return out;
}

double ConfusionMatrix::miou() const {
  double sum = 0.0;
  int present = 0;
  for (const auto& iou : per_class_iou()) {
    if (!iou) continue;
    sum += *iou;
    ++present;
  }
  return present == 0 ? 0.0 : sum / present;
}

ConfusionMatrix& update_confusion(ConfusionMatrix& cm, const LabelImage& predictions,
                                  const LabelImage& targets) {
  cm.update(predictions, targets);
  return cm;
}

std::optional<double> class_iou(const ConfusionMatrix& cm, int c) { return cm.class_iou(c); }

EvaluationResult evaluate_splits(const std::vector<TestVolume>& volumes,
                                 const std::vector<SplitSpec>& splits, int num_classes,
                                 const SlicePredictor& predict) {
  if (splits.empty()) throw ConfigError("no test splits");
  EvaluationResult result;
  double sum = 0.0;
  for (const auto& split : splits) {
    if (split.crosslines.empty())
      throw ConfigError("split " + std::to_string(split.split_id) + " is empty");
    ConfusionMatrix cm(num_classes);
    for (const auto& ref : split.crosslines) {
      if (ref.volume_id < 0 || ref.volume_id >= static_cast<int>(volumes.size()))
        throw ConfigError("split references unknown volume " + std::to_string(ref.volume_id));
      const auto& vol = volumes[static_cast<std::size_t>(ref.volume_id)];
      if (ref.index < 0 || ref.index >= vol.amplitude.dims.crosslines)
        throw ConfigError("split references cross-line " + std::to_string(ref.index) +
                          " outside volume " + std::to_string(ref.volume_id));
      const CrossLineSlice slice = extract_crossline(vol.amplitude, ref.index, &vol.labels);
      cm.update(predict(slice), *slice.mask);
    }
    SplitReport report;
    report.split_id = split.split_id;
    report.per_class_iou = cm.per_class_iou();
    report.miou = cm.miou();
    report.pixel_count = cm.total();
    report.confusion = cm.counts();
    sum += report.miou;
    result.splits.push_back(std::move(report));
  }
  result.average_miou = sum / static_cast<double>(splits.size());
  return result;
}

void to_json(nlohmann::json& j, const SplitReport& r) {
  nlohmann::json ious = nlohmann::json::array();
  for (const auto& v : r.per_class_iou) ious.push_back(v ? nlohmann::json(*v) : nlohmann::json());
  nlohmann::json cm = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.confusion.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index k = 0; k < r.confusion.cols(); ++k) row.push_back(r.confusion(i, k));
    cm.push_back(row);
  }
  j = {{"split_id", r.split_id},
       {"per_class_iou", ious},
       {"miou", r.miou},
       {"pixel_count", r.pixel_count},
       {"confusion", cm}};
}

nlohmann::json to_json(const EvaluationResult& result) {
  nlohmann::json splits = nlohmann::json::array();
  for (const auto& s : result.splits) splits.push_back(s);
  return {{"splits", splits}, {"average_miou", result.average_miou}};
}

}  // namespace volcon
