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
#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "oracles.hpp"
#include "test_util.hpp"
#include "volcon/errors.hpp"
#include "volcon/npy.hpp"
#include "volcon/volume.hpp"

namespace volcon {
namespace {

using testing::TempDir;

SeismicVolume ramp_volume(VolumeDims dims) {
  std::vector<float> v(static_cast<std::size_t>(dims.size()));
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = static_cast<float>(k) * 0.5f - 3.0f;
  return make_seismic_volume(dims, v);
}

TEST(VolumeLoad, SurveyShapedVolumeKeepsAxisOrder) {
  TempDir dir;
  // 400 in-lines by 700 cross-lines; the depth axis is data-defined.
  const std::vector<std::size_t> shape{400, 700, 1};
  std::vector<float> data(400 * 700);
  for (std::size_t k = 0; k < data.size(); ++k) data[k] = static_cast<float>(k % 97);
  npy::write(dir.file("full.npy"), shape, data);
  const auto vol = load_seismic_volume(dir.file("full.npy"));
  EXPECT_EQ(vol.dims, (VolumeDims{400, 700, 1}));
  const auto slices = extract_crosslines(vol);
  ASSERT_EQ(slices.size(), 700u);
  EXPECT_EQ(slices[0].image.rows(), 400);
  EXPECT_EQ(slices[0].image.cols(), 1);
}

TEST(VolumeLoad, MinimalVolume) {
  TempDir dir;
  npy::write(dir.file("one.npy"), {1, 1, 1}, std::vector<float>{0.5f});
  const auto vol = std::get<SeismicVolume>(load_volume(dir.file("one.npy"), VolumeKind::kAmplitude));
  EXPECT_EQ(vol.dims, (VolumeDims{1, 1, 1}));
  EXPECT_FLOAT_EQ(vol.at(0, 0, 0), 0.5f);
}

TEST(VolumeLoad, NonIntegerLabelIsDataError) {
  TempDir dir;
  npy::write(dir.file("l.npy"), {1, 1, 2}, std::vector<float>{1.0f, 2.5f});
  EXPECT_THROW(load_label_volume(dir.file("l.npy")), DataError);
}

TEST(VolumeLoad, NegativeLabelIsDataError) {
  TempDir dir;
  npy::write(dir.file("l.npy"), {1, 1, 2}, std::vector<std::int32_t>{0, -1});
  EXPECT_THROW(load_label_volume(dir.file("l.npy")), DataError);
}

TEST(VolumeLoad, NonFiniteAmplitudeIsDataError) {
  TempDir dir;
  npy::write(dir.file("a.npy"), {1, 1, 2}, std::vector<float>{1.0f, std::nanf("")});
  EXPECT_THROW(load_seismic_volume(dir.file("a.npy")), DataError);
  npy::write(dir.file("b.npy"), {1, 1, 2}, std::vector<float>{INFINITY, 0.0f});
  EXPECT_THROW(load_seismic_volume(dir.file("b.npy")), DataError);
}

TEST(VolumeLoad, WrongRankIsFormatError) {
  TempDir dir;
  npy::write(dir.file("a.npy"), {2, 2}, std::vector<float>{1, 2, 3, 4});
  EXPECT_THROW(load_seismic_volume(dir.file("a.npy")), FormatError);
}

TEST(VolumeLoad, LabelVolumeClassCountAndRoundTrip) {
  TempDir dir;
  const auto labels = make_label_volume({1, 2, 2}, {0, 3, 1, 1});
  EXPECT_EQ(labels.num_classes, 4);
  save_volume(dir.file("l.npy"), labels);
  const auto back = load_label_volume(dir.file("l.npy"));
  EXPECT_EQ(back.classes, labels.classes);
  EXPECT_EQ(back.dims, labels.dims);
}

TEST(Crosslines, SingleCrosslineVolume) {
  const auto slices = extract_crosslines(ramp_volume({4, 1, 4}));
  ASSERT_EQ(slices.size(), 1u);
  EXPECT_EQ(slices[0].image.rows(), 4);
  EXPECT_EQ(slices[0].image.cols(), 4);
}

TEST(Crosslines, SliceMatchesDirectIndexing) {
  const VolumeDims dims{5, 7, 6};
  const auto vol = ramp_volume(dims);
  for (Index k = 0; k < dims.crosslines; ++k) {
    const auto s = extract_crossline(vol, k);
    EXPECT_EQ(s.crossline_index, k);
    for (Index i = 0; i < dims.inlines; ++i)
      for (Index z = 0; z < dims.depth; ++z)
        EXPECT_EQ(s.image(i, z), vol.amplitudes[static_cast<std::size_t>((i * dims.crosslines + k) * dims.depth + z)]);
  }
}

TEST(Crosslines, ExtractThenStackReconstructs) {
  const auto vol = ramp_volume({3, 5, 4});
  const auto back = stack_crosslines(extract_crosslines(vol));
  EXPECT_EQ(back.dims, vol.dims);
  EXPECT_EQ(back.amplitudes, vol.amplitudes);
}

TEST(Crosslines, MasksFollowLabels) {
  SyntheticVolumeConfig cfg;
  cfg.dims = {4, 3, 8};
  const auto [amp, labels] = generate_synthetic_volume(cfg);
  const auto slices = extract_crosslines(amp, labels);
  for (const auto& s : slices) {
    ASSERT_TRUE(s.mask.has_value());
    EXPECT_EQ(s.mask->rows(), s.image.rows());
    EXPECT_EQ(s.mask->cols(), s.image.cols());
    EXPECT_EQ((*s.mask)(1, 5), labels.at(1, s.crossline_index, 5));
  }
}

TEST(Crosslines, ShapeMismatchIsDataError) {
  const auto vol = ramp_volume({2, 3, 4});
  const auto labels = make_label_volume({2, 3, 3}, std::vector<std::int32_t>(18, 0));
  EXPECT_THROW(extract_crosslines(vol, labels), DataError);
  EXPECT_THROW(extract_crossline(vol, 3), DataError);
}

TEST(VolumeLabels, SurveyExampleHundredRunsOfSeven) {
  const auto a = assign_volume_labels(700, 100);
  ASSERT_EQ(a.labels.size(), 700u);
  for (int i = 0; i < 700; ++i) EXPECT_EQ(a.labels[i], i / 7);
  for (int i = 0; i < 7; ++i) EXPECT_EQ(a.labels[i], 0);
}

TEST(VolumeLabels, SinglePartitionIsAllZero) {
  const auto a = assign_volume_labels(10, 1);
  EXPECT_EQ(a.labels, std::vector<int>(10, 0));
}

TEST(VolumeLabels, UnevenSplitOfTen) {
  EXPECT_EQ(assign_volume_labels(10, 3).labels, (std::vector<int>{0, 0, 0, 0, 1, 1, 1, 2, 2, 2}));
}

TEST(VolumeLabels, OutOfRangePartitionCountsAreConfigErrors) {
  EXPECT_THROW(assign_volume_labels(10, 0), ConfigError);
  EXPECT_THROW(assign_volume_labels(10, 11), ConfigError);
}

TEST(VolumeLabels, PropertiesHoldForAllSmallCases) {
  for (Index s = 1; s <= 64; ++s) {
    for (Index n = 1; n <= s; ++n) {
      const auto a = assign_volume_labels(s, n);
      ASSERT_EQ(static_cast<Index>(a.labels.size()), s);
      std::vector<Index> sizes(static_cast<std::size_t>(n), 0);
      for (Index i = 0; i < s; ++i) {
        const int l = a.labels[static_cast<std::size_t>(i)];
        ASSERT_GE(l, 0);
        ASSERT_LT(l, n);
        if (i > 0) {
          // Non-decreasing with unit steps means each label is one contiguous run.
          const int prev = a.labels[static_cast<std::size_t>(i - 1)];
          ASSERT_TRUE(l == prev || l == prev + 1) << "S=" << s << " N=" << n;
        }
        ++sizes[static_cast<std::size_t>(l)];
      }
      const auto [lo, hi] = std::minmax_element(sizes.begin(), sizes.end());
      ASSERT_GE(*lo, s / n);
      ASSERT_LE(*hi, (s + n - 1) / n);
      if (s % n == 0) ASSERT_EQ(*lo, *hi);
    }
  }
}

TEST(VolumeLabels, IdentityPartition) {
  const auto a = assign_volume_labels(9, 9);
  for (int i = 0; i < 9; ++i) EXPECT_EQ(a.labels[i], i);
}

TEST(VolumeLabels, JsonRoundTrip) {
  const auto a = assign_volume_labels(12, 5);
  const auto back = assignment_from_json(assignment_to_json(a));
  EXPECT_EQ(back.num_slices, 12);
  EXPECT_EQ(back.num_partitions, 5);
  EXPECT_EQ(back.labels, a.labels);
}

TEST(TestSplits, NineHundredIntoThree) {
  const auto splits = build_test_splits(200, 700, 3);
  ASSERT_EQ(splits.size(), 3u);
  for (const auto& s : splits) EXPECT_EQ(s.crosslines.size(), 300u);
  const auto& first = splits[0].crosslines;
  for (int k = 0; k < 200; ++k) {
    EXPECT_EQ(first[k].volume_id, 0);
    EXPECT_EQ(first[k].index, k);
  }
  for (int k = 0; k < 100; ++k) {
    EXPECT_EQ(first[200 + k].volume_id, 1);
    EXPECT_EQ(first[200 + k].index, k);
  }
}

TEST(TestSplits, TinyCase) {
  const auto splits = build_test_splits(1, 2, 3);
  ASSERT_EQ(splits.size(), 3u);
  EXPECT_EQ(splits[0].crosslines[0].volume_id, 0);
  EXPECT_EQ(splits[1].crosslines[0].volume_id, 1);
  EXPECT_EQ(splits[2].crosslines[0].index, 1);
}

TEST(TestSplits, DisjointExhaustiveOrdered) {
  const auto splits = build_test_splits(13, 8, 7);
  std::vector<std::pair<int, Index>> seen;
  for (int s = 0; s < 7; ++s) {
    EXPECT_EQ(splits[s].split_id, s);
    for (const auto& r : splits[s].crosslines) seen.emplace_back(r.volume_id, r.index);
  }
  ASSERT_EQ(seen.size(), 21u);
  EXPECT_TRUE(std::is_sorted(seen.begin(), seen.end()));
  const std::set<std::pair<int, Index>> unique(seen.begin(), seen.end());
  EXPECT_EQ(unique.size(), 21u);
}

TEST(TestSplits, NonDivisibleIsConfigError) { EXPECT_THROW(build_test_splits(200, 701, 3), ConfigError); }

TEST(TestSplits, JsonRoundTrip) {
  const auto splits = build_test_splits(2, 4, 3);
  const auto back = splits_from_json(splits_to_json(splits));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t s = 0; s < 3; ++s) {
    EXPECT_EQ(back[s].split_id, splits[s].split_id);
    ASSERT_EQ(back[s].crosslines.size(), splits[s].crosslines.size());
    for (std::size_t k = 0; k < back[s].crosslines.size(); ++k) {
      EXPECT_EQ(back[s].crosslines[k].volume_id, splits[s].crosslines[k].volume_id);
      EXPECT_EQ(back[s].crosslines[k].index, splits[s].crosslines[k].index);
    }
  }
  const auto single = splits_from_json(R"({"split_id": 1, "crosslines": [[0, 4], [1, 2]]})");
  ASSERT_EQ(single.size(), 1u);
  EXPECT_EQ(single[0].crosslines[1].volume_id, 1);
}

TEST(Normalization, ConstantVolumeIsDataError) {
  EXPECT_THROW(compute_normalization_stats(make_seismic_volume({1, 2, 2}, std::vector<float>(4, 5.0f))),
               DataError);
}

TEST(Normalization, SymmetricPair) {
  const auto s = compute_normalization_stats(make_seismic_volume({1, 1, 2}, {-1.0f, 1.0f}));
  EXPECT_DOUBLE_EQ(s.mean, 0.0);
  EXPECT_DOUBLE_EQ(s.std, 1.0);
}

TEST(Normalization, MatchesTwoPassOracle) {
  SyntheticVolumeConfig cfg;
  cfg.dims = {100, 100, 100};
  cfg.noise = 0.3;
  cfg.seed = 11;
  const auto amp = generate_synthetic_volume(cfg).first;
  const auto s = compute_normalization_stats(amp);
  const auto [mean, std] = oracle::mean_std(amp.amplitudes);
  EXPECT_NEAR(s.mean, mean, 1e-9 * std::max(1.0, std::abs(mean)));
  EXPECT_NEAR(s.std, std, 1e-9 * std);
}

TEST(Synthetic, NoiselessTwoLayerBands) {
  SyntheticVolumeConfig cfg;
  cfg.layers = 2;
  cfg.dims = {8, 16, 32};
  cfg.dip = 0.0;
  cfg.noise = 0.0;
  cfg.seed = 7;
  const auto labels = generate_synthetic_volume(cfg).second;
  EXPECT_EQ(std::set<std::int32_t>(labels.classes.begin(), labels.classes.end()).size(), 2u);
  // Horizontal bands: the class depends on depth only.
  for (Index i = 0; i < 8; ++i)
    for (Index x = 0; x < 16; ++x)
      for (Index z = 0; z < 32; ++z) EXPECT_EQ(labels.at(i, x, z), labels.at(0, 0, z));
  EXPECT_EQ(labels.at(0, 0, 0), 0);
  EXPECT_EQ(labels.at(0, 0, 31), 1);
}

TEST(Synthetic, SameSeedIsBitIdentical) {
  SyntheticVolumeConfig cfg;
  cfg.seed = 3;
  const auto a = generate_synthetic_volume(cfg);
  const auto b = generate_synthetic_volume(cfg);
  EXPECT_EQ(a.first.amplitudes, b.first.amplitudes);
  EXPECT_EQ(a.second.classes, b.second.classes);
  cfg.seed = 4;
  EXPECT_NE(generate_synthetic_volume(cfg).first.amplitudes, a.first.amplitudes);
}

TEST(Synthetic, NearbyCrosslinesAreMoreAlike) {
  SyntheticVolumeConfig cfg;
  cfg.dims = {16, 64, 64};
  cfg.dip = 0.25;
  const auto amp = generate_synthetic_volume(cfg).first;
  auto mean_abs_diff = [&](Index k) {
    double total = 0.0;
    Index count = 0;
    for (Index x = 0; x + k < amp.dims.crosslines; ++x)
      for (Index i = 0; i < amp.dims.inlines; ++i)
        for (Index z = 0; z < amp.dims.depth; ++z, ++count)
          total += std::abs(amp.at(i, x, z) - amp.at(i, x + k, z));
    return total / static_cast<double>(count);
  };
  const double adjacent = mean_abs_diff(1);
  for (Index k : {8, 16, 32}) EXPECT_LT(adjacent, mean_abs_diff(k)) << "k=" << k;
}

TEST(Synthetic, DegenerateConfigsAreConfigErrors) {
  SyntheticVolumeConfig cfg;
  cfg.layers = 1;
  EXPECT_THROW(generate_synthetic_volume(cfg), ConfigError);
  cfg = {};
  cfg.dims = {0, 4, 4};
  EXPECT_THROW(generate_synthetic_volume(cfg), ConfigError);
  cfg = {};
  cfg.noise = -1.0;
  EXPECT_THROW(generate_synthetic_volume(cfg), ConfigError);
}

}  // namespace
}  // namespace volcon
