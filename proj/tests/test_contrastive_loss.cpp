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
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "volcon/contrastive_loss.hpp"
#include "volcon/errors.hpp"

namespace volcon {
namespace {

using Batch = EmbeddingBatch<double>;
using Eigen::MatrixXd;

MatrixXd at_angles(std::initializer_list<double> degrees) {
  MatrixXd z(static_cast<Eigen::Index>(degrees.size()), 2);
  Eigen::Index i = 0;
  for (double d : degrees) {
    const double r = d * std::numbers::pi / 180.0;
    z(i, 0) = std::cos(r);
    z(i, 1) = std::sin(r);
    ++i;
  }
  return z;
}

std::vector<int> random_labels(int b, int classes, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> d(0, classes - 1);
  std::vector<int> labels(static_cast<std::size_t>(b));
  for (auto& l : labels) l = d(rng);
  return labels;
}

TEST(SupCon, IdenticalPairHasZeroLoss) {
  const MatrixXd z = at_angles({30.0, 30.0});
  const auto r = supcon_loss(Batch{z, {0, 0}, 1.0});
  EXPECT_NEAR(r.value, 0.0, 1e-12);
  EXPECT_EQ(r.num_anchors_used, 2);
  EXPECT_EQ(r.num_anchors_skipped, 0);
}

TEST(SupCon, FixedAnglesMatchOracle) {
  const MatrixXd z = at_angles({0.0, 10.0, 90.0, 100.0});
  const std::vector<int> labels{0, 0, 1, 1};
  const auto r = supcon_loss(Batch{z, labels, 0.07});
  EXPECT_NEAR(r.value, oracle::supcon(z, labels, 0.07, true), 1e-6);
}

TEST(SupCon, AllDistinctLabelsIsDegenerate) {
  std::mt19937_64 rng(1);
  const MatrixXd z = oracle::random_unit_rows(5, 3, rng);
  EXPECT_THROW(supcon_loss(Batch{z, {0, 1, 2, 3, 4}, 0.5}), DegenerateBatchError);
  EXPECT_THROW(supcon_gradient(Batch{z, {0, 1, 2, 3, 4}, 0.5}), DegenerateBatchError);
}

TEST(SupCon, InvalidBatchesAreDataErrors) {
  std::mt19937_64 rng(2);
  const MatrixXd z = oracle::random_unit_rows(4, 3, rng);
  EXPECT_THROW(supcon_loss(Batch{2.0 * z, {0, 0, 1, 1}, 0.5}), DataError);
  EXPECT_THROW(supcon_loss(Batch{z, {0, 0, 1}, 0.5}), DataError);
  EXPECT_THROW(supcon_loss(Batch{z, {0, 0, 1, 1}, 0.0}), DataError);
  EXPECT_THROW(supcon_loss(Batch{z.topRows(1), {0}, 0.5}), DataError);
}

TEST(SupCon, SkippedAnchorsAreCounted) {
  std::mt19937_64 rng(3);
  const MatrixXd z = oracle::random_unit_rows(5, 4, rng);
  const std::vector<int> labels{0, 0, 1, 2, 0};
  const auto r = supcon_loss(Batch{z, labels, 0.1});
  EXPECT_EQ(r.num_anchors_used, 3);
  EXPECT_EQ(r.num_anchors_skipped, 2);
  EXPECT_EQ(r.num_anchors_used + r.num_anchors_skipped, 5);
  EXPECT_EQ(r.anchor_terms(3), 0.0);
  EXPECT_NEAR(r.value, oracle::supcon(z, labels, 0.1, true), 1e-9);
}

TEST(SupCon, SumReductionMatchesOracle) {
  std::mt19937_64 rng(4);
  const MatrixXd z = oracle::random_unit_rows(6, 3, rng);
  const std::vector<int> labels{0, 1, 0, 1, 2, 2};
  const auto r = supcon_loss(Batch{z, labels, 0.2, LossReduction::kSum});
  EXPECT_NEAR(r.value, oracle::supcon(z, labels, 0.2, false), 1e-9);
}

TEST(SupCon, RandomBatchesMatchOracle) {
  std::mt19937_64 rng(5);
  for (int t = 0; t < 200; ++t) {
    const int b = 2 + static_cast<int>(rng() % 7);
    const int d = 1 + static_cast<int>(rng() % 4);
    const MatrixXd z = oracle::random_unit_rows(b, d, rng);
    auto labels = random_labels(b, 3, rng);
    labels[1] = labels[0];
    for (double tau : {0.07, 0.5, 1.0})
      ASSERT_NEAR(supcon_loss(Batch{z, labels, tau}).value, oracle::supcon(z, labels, tau, true), 1e-6);
  }
}

TEST(SupCon, PermutationInvariance) {
  std::mt19937_64 rng(6);
  const MatrixXd z = oracle::random_unit_rows(6, 3, rng);
  const std::vector<int> labels{0, 1, 0, 1, 2, 2};
  std::vector<int> perm{3, 0, 5, 1, 4, 2};
  MatrixXd zp(6, 3);
  std::vector<int> lp(6);
  for (int i = 0; i < 6; ++i) zp.row(i) = z.row(perm[i]), lp[i] = labels[perm[i]];
  const double base = supcon_loss(Batch{z, labels, 0.3}).value;
  EXPECT_NEAR(supcon_loss(Batch{zp, lp, 0.3}).value, base, 1e-12);
  const MatrixXd g = supcon_gradient(Batch{z, labels, 0.3});
  const MatrixXd gp = supcon_gradient(Batch{zp, lp, 0.3});
  for (int i = 0; i < 6; ++i) EXPECT_TRUE(gp.row(i).isApprox(g.row(perm[i]), 1e-12));
}

TEST(SupCon, LargeSimilaritiesStayFinite) {
  std::mt19937_64 rng(7);
  const MatrixXd z = oracle::random_unit_rows(8, 4, rng);
  const auto r = supcon_loss(Batch{z, {0, 0, 1, 1, 2, 2, 3, 3}, 1e-3});
  EXPECT_TRUE(std::isfinite(r.value));
  EXPECT_TRUE(supcon_gradient(Batch{z, {0, 0, 1, 1, 2, 2, 3, 3}, 1e-3}).allFinite());
}

TEST(SupCon, NegativeCloserThanPositiveGivesPositiveLoss) {
  const MatrixXd z = at_angles({0.0, 80.0, 5.0});
  EXPECT_GT(supcon_loss(Batch{z, {0, 0, 1}, 0.5}).value, 0.0);
}

TEST(SupCon, MovingPositiveTowardAnchorNeverIncreasesItsTerm) {
  // Anchor at 0 degrees; its positive sweeps from 170 degrees down to 0.
  double previous = std::numeric_limits<double>::infinity();
  for (double angle = 170.0; angle >= 0.0; angle -= 5.0) {
    const MatrixXd z = at_angles({0.0, angle, 60.0, 200.0});
    const auto r = supcon_loss(Batch{z, {0, 0, 1, 2}, 0.1});
    EXPECT_LE(r.anchor_terms(0), previous + 1e-12) << "angle " << angle;
    previous = r.anchor_terms(0);
  }
}

TEST(SupConGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  for (int t = 0; t < 20; ++t) {
    const MatrixXd z = oracle::random_unit_rows(6, 4, rng);
    auto labels = random_labels(6, 3, rng);
    labels[1] = labels[0];
    const double tau = 0.5;
    const MatrixXd g = supcon_gradient(Batch{z, labels, tau});
    const MatrixXd fd = oracle::finite_difference(
        [&](const MatrixXd& x) { return oracle::supcon(x, labels, tau, true); }, z, 1e-5);
    const double rel = (g - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), 1e-8);
    EXPECT_LT(rel, 1e-4);
  }
}

TEST(SupConGradient, SwappedIdenticalRowsHaveEqualGradients) {
  std::mt19937_64 rng(9);
  MatrixXd z = oracle::random_unit_rows(5, 3, rng);
  z.row(3) = z.row(1);
  const MatrixXd g = supcon_gradient(Batch{z, {0, 2, 1, 2, 0}, 0.2});
  EXPECT_TRUE(g.row(1).isApprox(g.row(3), 1e-12));
}

TEST(SupConGradient, TemperatureScalingActsOnSimilarities) {
  // Dividing tau by c is the same objective as scaling every dot product by
  // c, i.e. evaluating the unnormalized formula at sqrt(c) * Z.
  std::mt19937_64 rng(10);
  for (double c : {0.5, 2.0, 7.0}) {
    const MatrixXd z = oracle::random_unit_rows(6, 3, rng);
    const std::vector<int> labels{0, 0, 1, 1, 2, 0};
    const double tau = 0.4, root = std::sqrt(c);
    EXPECT_NEAR(supcon_loss(Batch{z, labels, tau / c}).value, oracle::supcon(root * z, labels, tau, true), 1e-9);
    const MatrixXd scaled = oracle::finite_difference(
        [&](const MatrixXd& x) { return oracle::supcon(root * x, labels, tau, true); }, z, 1e-6);
    const MatrixXd g = supcon_gradient(Batch{z, labels, tau / c});
    EXPECT_LT((g - scaled).cwiseAbs().maxCoeff(), 1e-5 * std::max(1.0, scaled.cwiseAbs().maxCoeff()));
  }
}

TEST(SimClr, SinglePairReducesToSupCon) {
  const MatrixXd z = at_angles({10.0, 40.0});
  EXPECT_EQ(simclr_loss<double>(z, 0.3).value, supcon_loss(Batch{z, {0, 0}, 0.3}).value);
}

TEST(SimClr, MatchesNtXentOracle) {
  std::mt19937_64 rng(11);
  const MatrixXd z = oracle::random_unit_rows(8, 5, rng);
  EXPECT_NEAR(simclr_loss<double>(z, 0.5).value, oracle::nt_xent(z, 0.5), 1e-6);
}

TEST(SimClr, SourceOrderDoesNotMatter) {
  std::mt19937_64 rng(12);
  const MatrixXd z = oracle::random_unit_rows(8, 3, rng);
  MatrixXd swapped = z;
  swapped.middleRows(0, 2) = z.middleRows(4, 2);
  swapped.middleRows(4, 2) = z.middleRows(0, 2);
  EXPECT_NEAR(simclr_loss<double>(swapped, 0.2).value, simclr_loss<double>(z, 0.2).value, 1e-12);
}

TEST(SimClr, OddRowCountIsDataError) {
  std::mt19937_64 rng(13);
  EXPECT_THROW(simclr_loss<double>(oracle::random_unit_rows(3, 2, rng), 0.1), DataError);
}

TEST(SimClr, GradientEqualsInstanceLabelSupCon) {
  std::mt19937_64 rng(14);
  const MatrixXd z = oracle::random_unit_rows(6, 3, rng);
  EXPECT_EQ(simclr_gradient<double>(z, 0.07), supcon_gradient(Batch{z, instance_labels(6), 0.07}));
}

}  // namespace
}  // namespace volcon
