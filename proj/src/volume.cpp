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
#include "volcon/volume.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "json.hpp"
#include "volcon/errors.hpp"
#include "volcon/npy.hpp"

namespace volcon {
namespace {

using json = nlohmann::json;

VolumeDims dims_from_shape(const std::vector<std::size_t>& shape, const std::string& path) {
  if (shape.size() != 3)
    throw FormatError("'" + path + "' has " + std::to_string(shape.size()) +
                      " dimensions, expected 3");
  return {static_cast<Index>(shape[0]), static_cast<Index>(shape[1]),
          static_cast<Index>(shape[2])};
}

void check_dims(const VolumeDims& d) {
  if (d.inlines < 1 || d.crosslines < 1 || d.depth < 1)
    throw DataError("volume dims must all be >= 1, got (" + std::to_string(d.inlines) + "," +
                    std::to_string(d.crosslines) + "," + std::to_string(d.depth) + ")");
}

}  // namespace

SeismicVolume make_seismic_volume(VolumeDims dims, std::vector<float> amplitudes) {
  check_dims(dims);
  if (static_cast<Index>(amplitudes.size()) != dims.size())
    throw DataError("amplitude count does not match dims");
  SeismicVolume vol;
  vol.dims = dims;
  float lo = amplitudes.front(), hi = amplitudes.front();
  for (float v : amplitudes) {
    if (!std::isfinite(v)) throw DataError("amplitudes contain NaN or Inf");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  vol.amplitudes = std::move(amplitudes);
  vol.value_range = {lo, hi};
  return vol;
}

LabelVolume make_label_volume(VolumeDims dims, std::vector<std::int32_t> classes) {
  check_dims(dims);
  if (static_cast<Index>(classes.size()) != dims.size())
    throw DataError("label count does not match dims");
  std::int32_t hi = 0;
  for (auto c : classes) {
    if (c < 0) throw DataError("negative class label " + std::to_string(c));
    hi = std::max(hi, c);
  }
  LabelVolume vol;
  vol.dims = dims;
  vol.classes = std::move(classes);
  vol.num_classes = std::max(2, hi + 1);
  return vol;
}

SeismicVolume load_seismic_volume(const std::string& path) {
  auto arr = npy::read_float32(path, [](double v) {
    if (!std::isfinite(v)) throw DataError("amplitudes contain NaN or Inf");
  });
  return make_seismic_volume(dims_from_shape(arr.shape, path), std::move(arr.data));
}

LabelVolume load_label_volume(const std::string& path) {
  auto arr = npy::read_int32(path, [](double v) {
    if (!std::isfinite(v) || v != std::floor(v))
      throw DataError("non-integer label value " + std::to_string(v));
    if (v < 0 || v > 2147483647.0) throw DataError("label value out of range");
  });
  return make_label_volume(dims_from_shape(arr.shape, path), std::move(arr.data));
}

std::variant<SeismicVolume, LabelVolume> load_volume(const std::string& path, VolumeKind kind) {
  if (kind == VolumeKind::kAmplitude) return load_seismic_volume(path);
  return load_label_volume(path);
}

void save_volume(const std::string& path, const SeismicVolume& vol) {
  npy::write(path,
             {static_cast<std::size_t>(vol.dims.inlines), static_cast<std::size_t>(vol.dims.crosslines),
              static_cast<std::size_t>(vol.dims.depth)},
             vol.amplitudes);
}

void save_volume(const std::string& path, const LabelVolume& vol) {
  npy::write(path,
             {static_cast<std::size_t>(vol.dims.inlines), static_cast<std::size_t>(vol.dims.crosslines),
              static_cast<std::size_t>(vol.dims.depth)},
             vol.classes);
}

CrossLineSlice extract_crossline(const SeismicVolume& vol, Index crossline,
                                 const LabelVolume* labels) {
  const auto& d = vol.dims;
  if (crossline < 0 || crossline >= d.crosslines)
    throw DataError("cross-line " + std::to_string(crossline) + " outside [0, " +
                    std::to_string(d.crosslines) + ")");
  if (labels != nullptr && !(labels->dims == d))
    throw DataError("label volume shape does not match amplitude volume");
  CrossLineSlice s;
  s.crossline_index = crossline;
  s.image.resize(d.inlines, d.depth);
  for (Index i = 0; i < d.inlines; ++i)
    for (Index z = 0; z < d.depth; ++z) s.image(i, z) = vol.at(i, crossline, z);
  if (labels != nullptr) {
    LabelImage m(d.inlines, d.depth);
    for (Index i = 0; i < d.inlines; ++i)
      for (Index z = 0; z < d.depth; ++z) m(i, z) = labels->at(i, crossline, z);
    s.mask = std::move(m);
  }
  return s;
}

std::vector<CrossLineSlice> extract_crosslines(const SeismicVolume& vol) {
  std::vector<CrossLineSlice> out;
  out.reserve(static_cast<std::size_t>(vol.dims.crosslines));
  for (Index x = 0; x < vol.dims.crosslines; ++x) out.push_back(extract_crossline(vol, x));
  return out;
}

std::vector<CrossLineSlice> extract_crosslines(const SeismicVolume& vol,
                                               const LabelVolume& labels) {
  if (!(labels.dims == vol.dims))
    throw DataError("label volume shape does not match amplitude volume");
  std::vector<CrossLineSlice> out;
  out.reserve(static_cast<std::size_t>(vol.dims.crosslines));
  for (Index x = 0; x < vol.dims.crosslines; ++x)
    out.push_back(extract_crossline(vol, x, &labels));
  return out;
}

SeismicVolume stack_crosslines(const std::vector<CrossLineSlice>& slices) {
  if (slices.empty()) throw DataError("no slices to stack");
  VolumeDims d{slices.front().image.rows(), static_cast<Index>(slices.size()),
               slices.front().image.cols()};
  std::vector<float> amp(static_cast<std::size_t>(d.size()));
  for (Index x = 0; x < d.crosslines; ++x) {
    const auto& s = slices[static_cast<std::size_t>(x)];
    if (s.crossline_index != x) throw DataError("slices are not in cross-line order");
    if (s.image.rows() != d.inlines || s.image.cols() != d.depth)
      throw DataError("slices have inconsistent shapes");
    for (Index i = 0; i < d.inlines; ++i)
      for (Index z = 0; z < d.depth; ++z) amp[d.offset(i, x, z)] = s.image(i, z);
  }
  return make_seismic_volume(d, std::move(amp));
}

VolumeLabelAssignment assign_volume_labels(Index num_slices, Index num_partitions) {
  if (num_partitions < 1 || num_partitions > num_slices)
    throw ConfigError("num_partitions must satisfy 1 <= N <= num_slices (" +
                      std::to_string(num_slices) + "), got " + std::to_string(num_partitions));
  VolumeLabelAssignment a;
  a.num_slices = num_slices;
  a.num_partitions = num_partitions;
  a.labels.resize(static_cast<std::size_t>(num_slices));
  for (Index i = 0; i < num_slices; ++i)
    a.labels[static_cast<std::size_t>(i)] = static_cast<int>(i * num_partitions / num_slices);
  return a;
}

std::vector<SplitSpec> build_test_splits(Index crosslines_volume_1, Index crosslines_volume_2,
                                         int num_splits) {
  if (num_splits < 1) throw ConfigError("num_splits must be >= 1");
  if (crosslines_volume_1 < 0 || crosslines_volume_2 < 0)
    throw ConfigError("cross-line counts must be non-negative");
  const Index total = crosslines_volume_1 + crosslines_volume_2;
  if (total == 0 || total % num_splits != 0)
    throw ConfigError("total test cross-lines (" + std::to_string(total) +
                      ") not divisible by num_splits (" + std::to_string(num_splits) + ")");
  std::vector<CrosslineRef> all;
  all.reserve(static_cast<std::size_t>(total));
  for (Index x = 0; x < crosslines_volume_1; ++x) all.push_back({0, x});
  for (Index x = 0; x < crosslines_volume_2; ++x) all.push_back({1, x});
  const Index per = total / num_splits;
  std::vector<SplitSpec> splits(static_cast<std::size_t>(num_splits));
  for (int s = 0; s < num_splits; ++s) {
    splits[s].split_id = s;
    splits[s].crosslines.assign(all.begin() + s * per, all.begin() + (s + 1) * per);
  }
  return splits;
}

std::string splits_to_json(const std::vector<SplitSpec>& splits) {
  json arr = json::array();
  for (const auto& s : splits) {
    json refs = json::array();
    for (const auto& r : s.crosslines) refs.push_back({r.volume_id, r.index});
    arr.push_back({{"split_id", s.split_id}, {"crosslines", refs}});
  }
  return arr.dump(2);
}

std::vector<SplitSpec> splits_from_json(const std::string& text) {
  std::vector<SplitSpec> out;
  try {
    json doc = json::parse(text);
    auto parse_one = [](const json& j) {
      SplitSpec s;
      s.split_id = j.at("split_id").get<int>();
      for (const auto& r : j.at("crosslines")) {
        if (!r.is_array() || r.size() != 2) throw ConfigError("crossline ref must be [volume_id, index]");
        s.crosslines.push_back({r[0].get<int>(), r[1].get<Index>()});
      }
      return s;
    };
    if (doc.is_array()) {
      for (const auto& j : doc) out.push_back(parse_one(j));
    } else {
      out.push_back(parse_one(doc));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad split file: ") + e.what());
  }
  return out;
}

std::string assignment_to_json(const VolumeLabelAssignment& a) {
  json j;
  j["num_slices"] = a.num_slices;
  j["num_partitions"] = a.num_partitions;
  j["labels"] = a.labels;
  return j.dump();
}

VolumeLabelAssignment assignment_from_json(const std::string& text) {
  try {
    json j = json::parse(text);
    VolumeLabelAssignment a;
    a.num_slices = j.at("num_slices").get<Index>();
    a.num_partitions = j.at("num_partitions").get<Index>();
    a.labels = j.at("labels").get<std::vector<int>>();
    if (static_cast<Index>(a.labels.size()) != a.num_slices)
      throw ConfigError("label count does not match num_slices");
    return a;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad label assignment: ") + e.what());
  }
}

NormalizationStats compute_normalization_stats(const SeismicVolume& vol) {
  if (vol.amplitudes.empty()) throw DataError("empty volume");
  // Welford update; numerically stable in one pass.
  double mean = 0.0, m2 = 0.0;
  std::size_t n = 0;
  for (float f : vol.amplitudes) {
    const double v = f;
    ++n;
    const double delta = v - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(n);
  if (!(var > 0.0)) throw DataError("volume has zero variance; cannot normalize");
  return {mean, std::sqrt(var)};
}

double synthetic_boundary_depth(const SyntheticVolumeConfig& cfg, int j, Index i, Index x) {
  const auto& d = cfg.dims;
  const double base = static_cast<double>(d.depth) * j / cfg.layers;
  const double xc = 0.5 * static_cast<double>(d.crosslines - 1);
  const double ic = 0.5 * static_cast<double>(d.inlines - 1);
  return base + cfg.dip * (static_cast<double>(x) - xc) +
         0.5 * cfg.dip * (static_cast<double>(i) - ic);
}

std::pair<SeismicVolume, LabelVolume> generate_synthetic_volume(const SyntheticVolumeConfig& cfg) {
  if (cfg.layers < 2) throw ConfigError("synthetic volume needs at least 2 layers");
  const auto& d = cfg.dims;
  if (d.inlines < 1 || d.crosslines < 1 || d.depth < 1)
    throw ConfigError("synthetic dims must be positive");
  if (d.depth < cfg.layers) throw ConfigError("depth must be at least the layer count");
  if (cfg.noise < 0.0) throw ConfigError("noise must be non-negative");

  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::vector<double> base(cfg.layers), period(cfg.layers), phase(cfg.layers);
  for (int k = 0; k < cfg.layers; ++k) {
    base[k] = -1.0 + 2.0 * k / (cfg.layers - 1);
    period[k] = 4.0 + 2.0 * k;
    phase[k] = phase_dist(rng);
  }
  constexpr double kTexture = 0.2;
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<float> amp(static_cast<std::size_t>(d.size()));
  std::vector<std::int32_t> cls(static_cast<std::size_t>(d.size()));
  std::vector<double> bounds(cfg.layers);
  for (Index i = 0; i < d.inlines; ++i) {
    for (Index x = 0; x < d.crosslines; ++x) {
      for (int j = 1; j < cfg.layers; ++j) bounds[j] = synthetic_boundary_depth(cfg, j, i, x);
      for (Index z = 0; z < d.depth; ++z) {
        int k = 0;
        for (int j = 1; j < cfg.layers; ++j)
          if (static_cast<double>(z) >= bounds[j]) k = j;
        const double tex =
            kTexture * std::sin(2.0 * std::numbers::pi * static_cast<double>(z) / period[k] + phase[k]);
        double v = base[k] + tex;
        if (cfg.noise > 0.0) v += cfg.noise * noise(rng);
        const auto off = d.offset(i, x, z);
        amp[off] = static_cast<float>(v);
        cls[off] = k;
      }
    }
  }
  auto vol = make_seismic_volume(d, std::move(amp));
  auto lab = make_label_volume(d, std::move(cls));
  lab.num_classes = cfg.layers;
  return {std::move(vol), std::move(lab)};
}

}  // namespace volcon
