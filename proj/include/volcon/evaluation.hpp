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
#ifndef VOLCON_EVALUATION_HPP_
#define VOLCON_EVALUATION_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "volcon/volume.hpp"

namespace volcon {

using CountMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

/// C x C pixel counts; rows are ground truth, columns are predictions.
class ConfusionMatrix {
 public:
  explicit ConfusionMatrix(int num_classes);

  int num_classes() const { return static_cast<int>(counts_.rows()); }
  const CountMatrix& counts() const { return counts_; }
  std::int64_t total() const { return counts_.sum(); }

  /// counts[t][p] += 1 per pixel. Throws DataError on shape mismatch or a
  /// class outside [0, C); the matrix is left untouched in that case.
  void update(const LabelImage& predictions, const LabelImage& targets);
  void merge(const ConfusionMatrix& other);

  /// IoU_c = n_cc / (row_c + col_c - n_cc); nullopt when the denominator is 0.
  std::optional<double> class_iou(int c) const;
  std::vector<std::optional<double>> per_class_iou() const;
  /// Mean over classes whose IoU is defined. 0 when none is.
  double miou() const;

 private:
  CountMatrix counts_;
};

/// Free-function forms.
ConfusionMatrix& update_confusion(ConfusionMatrix& cm, const LabelImage& predictions,
                                  const LabelImage& targets);
std::optional<double> class_iou(const ConfusionMatrix& cm, int c);

struct SplitReport {
  int split_id = 0;
  std::vector<std::optional<double>> per_class_iou;
  double miou = 0.0;
  std::int64_t pixel_count = 0;
  CountMatrix confusion;
};

struct EvaluationResult {
  std::vector<SplitReport> splits;
  double average_miou = 0.0;
};

struct TestVolume {
  SeismicVolume amplitude;
  LabelVolume labels;
};

using SlicePredictor = std::function<LabelImage(const CrossLineSlice&)>;

/// Scores every split with one accumulated confusion matrix and averages
/// the per-split MIOUs. Empty splits or references outside the volumes are
/// ConfigErrors.
EvaluationResult evaluate_splits(const std::vector<TestVolume>& volumes,
                                 const std::vector<SplitSpec>& splits, int num_classes,
                                 const SlicePredictor& predict);

void to_json(nlohmann::json& j, const SplitReport& r);
nlohmann::json to_json(const EvaluationResult& result);

}  // namespace volcon

#endif  // VOLCON_EVALUATION_HPP_
