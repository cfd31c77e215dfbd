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
#ifndef VOLCON_VOLUME_HPP_
#define VOLCON_VOLUME_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace volcon {

using Index = Eigen::Index;
using Image = Eigen::MatrixXf;  // H x W
using LabelImage = Eigen::Matrix<std::int32_t, Eigen::Dynamic, Eigen::Dynamic>;

// Axis order is (inline, crossline, depth); storage is C order over that
// triple, matching an NPY array of shape (inlines, crosslines, depth).
struct VolumeDims {
  Index inlines = 0;
  Index crosslines = 0;
  Index depth = 0;

  Index size() const { return inlines * crosslines * depth; }
  Index offset(Index i, Index x, Index z) const { return (i * crosslines + x) * depth + z; }
  bool operator==(const VolumeDims&) const = default;
};

struct SeismicVolume {
  VolumeDims dims;
  std::vector<float> amplitudes;
  std::pair<float, float> value_range{0.0f, 0.0f};

  float at(Index i, Index x, Index z) const { return amplitudes[dims.offset(i, x, z)]; }
};

struct LabelVolume {
  VolumeDims dims;
  std::vector<std::int32_t> classes;
  int num_classes = 2;

  std::int32_t at(Index i, Index x, Index z) const { return classes[dims.offset(i, x, z)]; }
};

/// One cross-line section. The image is (inline x depth): row = inline,
/// column = depth.
struct CrossLineSlice {
  Image image;
  Index crossline_index = 0;
  std::optional<LabelImage> mask;
};

struct VolumeLabelAssignment {
  Index num_slices = 0;
  Index num_partitions = 0;
  std::vector<int> labels;
};

struct CrosslineRef {
  int volume_id = 0;
  Index index = 0;
  bool operator==(const CrosslineRef&) const = default;
};

struct SplitSpec {
  int split_id = 0;
  std::vector<CrosslineRef> crosslines;
};

struct NormalizationStats {
  double mean = 0.0;
  double std = 1.0;
};

enum class VolumeKind { kAmplitude, kLabel };

// Loading ------------------------------------------------------------------

SeismicVolume load_seismic_volume(const std::string& path);
LabelVolume load_label_volume(const std::string& path);
std::variant<SeismicVolume, LabelVolume> load_volume(const std::string& path, VolumeKind kind);

void save_volume(const std::string& path, const SeismicVolume& vol);
void save_volume(const std::string& path, const LabelVolume& vol);

/// Builds a validated volume from raw values (rejects NaN/Inf, bad dims).
SeismicVolume make_seismic_volume(VolumeDims dims, std::vector<float> amplitudes);
LabelVolume make_label_volume(VolumeDims dims, std::vector<std::int32_t> classes);

// Slicing ------------------------------------------------------------------

CrossLineSlice extract_crossline(const SeismicVolume& vol, Index crossline,
                                 const LabelVolume* labels = nullptr);
std::vector<CrossLineSlice> extract_crosslines(const SeismicVolume& vol);
std::vector<CrossLineSlice> extract_crosslines(const SeismicVolume& vol,
                                               const LabelVolume& labels);

/// Inverse of extract_crosslines: slices must be complete and in order.
SeismicVolume stack_crosslines(const std::vector<CrossLineSlice>& slices);

// Pseudo labels and splits -------------------------------------------------

/// label(i) = floor(i * N / S). Throws ConfigError unless 1 <= N <= S.
VolumeLabelAssignment assign_volume_labels(Index num_slices, Index num_partitions);

std::vector<SplitSpec> build_test_splits(Index crosslines_volume_1, Index crosslines_volume_2,
                                         int num_splits);

std::string splits_to_json(const std::vector<SplitSpec>& splits);
/// Accepts a single split object or an array of them.
std::vector<SplitSpec> splits_from_json(const std::string& text);

std::string assignment_to_json(const VolumeLabelAssignment& assignment);
VolumeLabelAssignment assignment_from_json(const std::string& text);

// Statistics ---------------------------------------------------------------

/// Mean and population standard deviation over every amplitude.
NormalizationStats compute_normalization_stats(const SeismicVolume& vol);

// Synthetic data -----------------------------------------------------------

struct SyntheticVolumeConfig {
  int layers = 3;
  VolumeDims dims{32, 64, 64};
  double dip = 0.25;    // boundary shift in depth samples per cross-line
  double noise = 0.05;  // gaussian noise standard deviation
  std::uint64_t seed = 0;
};

/// Depth-layered volume: class k fills the k-th depth band, whose boundaries
/// shift by `dip` samples per cross-line (and half that per in-line).
/// Amplitudes are a per-class base value, a per-class sinusoidal texture and
/// gaussian noise.
std::pair<SeismicVolume, LabelVolume> generate_synthetic_volume(const SyntheticVolumeConfig& cfg);

/// Depth of the boundary between class j-1 and class j (1 <= j < layers) at
/// in-line i and cross-line x. Voxels with z >= boundary belong to class >= j.
double synthetic_boundary_depth(const SyntheticVolumeConfig& cfg, int j, Index i, Index x);

}  // namespace volcon

#endif  // VOLCON_VOLUME_HPP_
