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
#ifndef VOLCON_CONTRASTIVE_LOSS_HPP_
#define VOLCON_CONTRASTIVE_LOSS_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "volcon/errors.hpp"

namespace volcon {

inline constexpr double kDefaultTemperature = 0.07;

/// How per-anchor terms are combined. kMean averages over anchors that have
/// at least one positive; kSum is the bare sum over those anchors.
enum class LossReduction { kMean, kSum };

template <typename Scalar>
struct EmbeddingBatch {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Matrix embeddings;        // B x D, unit rows
  std::vector<int> labels;  // length B
  Scalar temperature = Scalar(kDefaultTemperature);
  LossReduction reduction = LossReduction::kMean;
};

template <typename Scalar>
struct LossResult {
  Scalar value = 0;
  Eigen::Index num_anchors_used = 0;
  Eigen::Index num_anchors_skipped = 0;
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> anchor_terms;  // per row; 0 when skipped
};

namespace detail {

template <typename Scalar>
void validate_batch(const EmbeddingBatch<Scalar>& batch, Scalar norm_tol) {
  const auto& z = batch.embeddings;
  if (z.rows() < 2) throw DataError("embedding batch needs at least 2 rows");
  if (z.cols() < 1) throw DataError("embedding dimension must be >= 1");
  if (static_cast<Eigen::Index>(batch.labels.size()) != z.rows())
    throw DataError("label count does not match embedding rows");
  if (!(batch.temperature > Scalar(0))) throw DataError("temperature must be positive");
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    const Scalar n = z.row(i).norm();
    if (!(std::abs(n - Scalar(1)) <= norm_tol))
      throw DataError("embedding row " + std::to_string(i) + " is not unit norm (|z| = " +
                      std::to_string(static_cast<double>(n)) + ")");
  }
}

// Row-wise softmax over a != i of s(i, a), plus log-sum-exp per row. The
// diagonal is excluded by construction and left at zero in `prob`.
template <typename Scalar>
void masked_softmax(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& sim,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& prob,
                    Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& lse) {
  const Eigen::Index b = sim.rows();
  prob.setZero(b, b);
  lse.resize(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    Scalar m = -std::numeric_limits<Scalar>::infinity();
    for (Eigen::Index a = 0; a < b; ++a)
      if (a != i) m = std::max(m, sim(i, a));
    Scalar total = 0;
    for (Eigen::Index a = 0; a < b; ++a) {
      if (a == i) continue;
      prob(i, a) = std::exp(sim(i, a) - m);
      total += prob(i, a);
    }
    prob.row(i) /= total;
    lse(i) = m + std::log(total);
  }
}

}  // namespace detail

/// Supervised contrastive loss. For each anchor i with positives
/// P(i) = {p != i : y_p = y_i}, the term is
///   -1/|P(i)| * sum_p [ s_ip - log sum_{a != i} exp(s_ia) ],  s = z z^T / tau,
/// evaluated with a max-subtracted log-sum-exp. Anchors without positives are
/// skipped and counted.
template <typename Scalar>
LossResult<Scalar> supcon_loss(const EmbeddingBatch<Scalar>& batch,
                               Scalar norm_tol = Scalar(1e-5)) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  detail::validate_batch(batch, norm_tol);
  const Eigen::Index b = batch.embeddings.rows();
  const Matrix sim = (batch.embeddings * batch.embeddings.transpose()) / batch.temperature;
  Matrix prob;
  Vector lse;
  detail::masked_softmax(sim, prob, lse);

  LossResult<Scalar> result;
  result.anchor_terms = Vector::Zero(b);
  Scalar total = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    Scalar pos_sum = 0;
    Eigen::Index n_pos = 0;
    for (Eigen::Index p = 0; p < b; ++p) {
      if (p == i || batch.labels[p] != batch.labels[i]) continue;
      pos_sum += sim(i, p);
      ++n_pos;
    }
    if (n_pos == 0) {
      ++result.num_anchors_skipped;
      continue;
    }
    ++result.num_anchors_used;
    result.anchor_terms(i) = lse(i) - pos_sum / static_cast<Scalar>(n_pos);
    total += result.anchor_terms(i);
  }
  if (result.num_anchors_used == 0)
    throw DegenerateBatchError("no anchor in the batch has a positive");
  result.value = batch.reduction == LossReduction::kMean
                     ? total / static_cast<Scalar>(result.num_anchors_used)
                     : total;
  return result;
}

/// Analytic gradient of supcon_loss(batch).value with respect to the rows of
/// batch.embeddings, treating them as free variables. With
///   G(i, a) = softmax_i(a) - [a in P(i)] / |P(i)|   (zero for skipped anchors)
/// scaled by the reduction, dL/dZ = (G + G^T) Z / tau.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> supcon_gradient(
    const EmbeddingBatch<Scalar>& batch, Scalar norm_tol = Scalar(1e-5)) {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  detail::validate_batch(batch, norm_tol);
  const Eigen::Index b = batch.embeddings.rows();
  const Matrix sim = (batch.embeddings * batch.embeddings.transpose()) / batch.temperature;
  Matrix g;
  Vector lse;
  detail::masked_softmax(sim, g, lse);

  Eigen::Index used = 0;
  for (Eigen::Index i = 0; i < b; ++i) {
    Eigen::Index n_pos = 0;
    for (Eigen::Index p = 0; p < b; ++p)
      if (p != i && batch.labels[p] == batch.labels[i]) ++n_pos;
    if (n_pos == 0) {
      g.row(i).setZero();
      continue;
    }
    ++used;
    const Scalar w = Scalar(1) / static_cast<Scalar>(n_pos);
    for (Eigen::Index p = 0; p < b; ++p)
      if (p != i && batch.labels[p] == batch.labels[i]) g(i, p) -= w;
  }
  if (used == 0) throw DegenerateBatchError("no anchor in the batch has a positive");
  if (batch.reduction == LossReduction::kMean) g /= static_cast<Scalar>(used);
  return ((g + g.transpose()) * batch.embeddings) / batch.temperature;
}

/// Instance labels for a two-view batch: rows 2j and 2j+1 share label j.
inline std::vector<int> instance_labels(Eigen::Index rows) {
  if (rows % 2 != 0)
    throw DataError("paired embedding batch needs an even row count, got " +
                    std::to_string(rows));
  std::vector<int> labels(static_cast<std::size_t>(rows));
  for (Eigen::Index r = 0; r < rows; ++r) labels[static_cast<std::size_t>(r)] = static_cast<int>(r / 2);
  return labels;
}

/// SimCLR / NT-Xent objective: supervised contrastive loss whose labels are
/// the source indices of interleaved view pairs.
template <typename Scalar>
LossResult<Scalar> simclr_loss(const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& paired,
                               Scalar temperature,
                               LossReduction reduction = LossReduction::kMean) {
  EmbeddingBatch<Scalar> batch{paired, instance_labels(paired.rows()), temperature, reduction};
  return supcon_loss(batch);
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> simclr_gradient(
    const Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>& paired, Scalar temperature,
    LossReduction reduction = LossReduction::kMean) {
  EmbeddingBatch<Scalar> batch{paired, instance_labels(paired.rows()), temperature, reduction};
  return supcon_gradient(batch);
}

}  // namespace volcon

#endif  // VOLCON_CONTRASTIVE_LOSS_HPP_
