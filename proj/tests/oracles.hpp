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
// Independent reference implementations used only by the tests. They are
// written as plain loops over the definitions and share no code with the
// library.
#ifndef VOLCON_TESTS_ORACLES_HPP_
#define VOLCON_TESTS_ORACLES_HPP_

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace volcon::oracle {

using MatrixXd = Eigen::MatrixXd;

// Supervised contrastive loss, straight from the sum-over-anchors formula:
//   L_i = -1/|P(i)| sum_{p in P(i)} log( exp(z_i.z_p/t) / sum_{a != i} exp(z_i.z_a/t) )
// Anchors with no positive are skipped. mean=true averages over used anchors.
inline double supcon(const MatrixXd& z, const std::vector<int>& labels, double t, bool mean,
                     int* used_out = nullptr) {
  const int b = static_cast<int>(z.rows());
  double total = 0.0;
  int used = 0;
  for (int i = 0; i < b; ++i) {
    double denom = 0.0;
    for (int a = 0; a < b; ++a) {
      if (a == i) continue;
      double dot = 0.0;
      for (int d = 0; d < z.cols(); ++d) dot += z(i, d) * z(a, d);
      denom += std::exp(dot / t);
    }
    int n_pos = 0;
    double acc = 0.0;
    for (int p = 0; p < b; ++p) {
      if (p == i || labels[p] != labels[i]) continue;
      double dot = 0.0;
      for (int d = 0; d < z.cols(); ++d) dot += z(i, d) * z(p, d);
      acc += std::log(std::exp(dot / t) / denom);
      ++n_pos;
    }
    if (n_pos == 0) continue;
    total += -acc / n_pos;
    ++used;
  }
  if (used_out != nullptr) *used_out = used;
  return mean ? total / used : total;
}

// NT-Xent over 2N rows where rows 2k and 2k+1 are the two views of sample k.
// Written in the cosine-similarity form: rows are re-normalized here.
inline double nt_xent(const MatrixXd& z, double t) {
  const int n2 = static_cast<int>(z.rows());
  MatrixXd u = z;
  for (int i = 0; i < n2; ++i) u.row(i) /= u.row(i).norm();
  double total = 0.0;
  for (int i = 0; i < n2; ++i) {
    const int j = (i % 2 == 0) ? i + 1 : i - 1;
    double denom = 0.0;
    for (int k = 0; k < n2; ++k)
      if (k != i) denom += std::exp(u.row(i).dot(u.row(k)) / t);
    total += -std::log(std::exp(u.row(i).dot(u.row(j)) / t) / denom);
  }
  return total / n2;
}

// Central differences of a scalar function of a matrix.
inline MatrixXd finite_difference(const std::function<double(const MatrixXd&)>& f, const MatrixXd& x,
                                  double h) {
  MatrixXd g(x.rows(), x.cols());
  MatrixXd probe = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f(probe);
      probe(i, j) = orig - h;
      const double down = f(probe);
      probe(i, j) = orig;
      g(i, j) = (up - down) / (2 * h);
    }
  }
  return g;
}

// Pixel-counting confusion matrix and IoU; -1 marks an undefined IoU.
inline std::vector<std::vector<std::int64_t>> confusion(const std::vector<int>& pred,
                                                        const std::vector<int>& target, int classes) {
  std::vector<std::vector<std::int64_t>> cm(classes, std::vector<std::int64_t>(classes, 0));
  for (std::size_t k = 0; k < pred.size(); ++k) cm[target[k]][pred[k]] += 1;
  return cm;
}

inline double iou(const std::vector<int>& pred, const std::vector<int>& target, int c) {
  std::int64_t inter = 0, uni = 0;
  for (std::size_t k = 0; k < pred.size(); ++k) {
    const bool p = pred[k] == c, t = target[k] == c;
    inter += (p && t);
    uni += (p || t);
  }
  return uni == 0 ? -1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double miou(const std::vector<int>& pred, const std::vector<int>& target, int classes) {
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < classes; ++c) {
    const double v = iou(pred, target, c);
    if (v < 0) continue;
    sum += v;
    ++present;
  }
  return present == 0 ? 0.0 : sum / present;
}

// Two-pass mean and population standard deviation.
inline std::pair<double, double> mean_std(const std::vector<float>& v) {
  double mean = 0.0;
  for (float x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (float x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / static_cast<double>(v.size()))};
}

inline MatrixXd random_unit_rows(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd z(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) z(i, j) = n(rng);
    z.row(i) /= z.row(i).norm();
  }
  return z;
}

}  // namespace volcon::oracle

#endif  // VOLCON_TESTS_ORACLES_HPP_
