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
#ifndef VOLCON_NN_LAYERS_HPP_
#define VOLCON_NN_LAYERS_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "volcon/errors.hpp"
#include "volcon/nn/tensor.hpp"

// Layers cache what their backward pass needs only when run in Mode::kTrain.
// Calling backward() after an eval-mode forward is a logic error.

namespace volcon::nn {

using Rng = std::mt19937_64;

template <typename Scalar>
Matrix<Scalar> kaiming_normal(Index rows, Index cols, double fan, Rng& rng) {
  std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan));
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(dist(rng));
  return m;
}

template <typename Scalar>
Matrix<Scalar> uniform_init(Index rows, Index cols, double bound, Rng& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = static_cast<Scalar>(dist(rng));
  return m;
}

inline void require_cache(bool cached, const char* layer) {
  if (!cached) throw ConfigError(std::string(layer) + ": backward without a train-mode forward");
}

struct ConvOptions {
  Index in_channels = 1;
  Index out_channels = 1;
  Index kernel = 3;
  Index stride = 1;
  Index padding = 0;
  Index dilation = 1;
  bool bias = false;
};

inline Index conv_output_size(Index in, Index kernel, Index stride, Index padding,
                              Index dilation) {
  return (in + 2 * padding - dilation * (kernel - 1) - 1) / stride + 1;
}

/// 2-D convolution through im2col and a single GEMM. Weight layout is
/// out x (kernel*kernel*in) with row index ((ky*kernel + kx)*in + ci).
template <typename Scalar>
class Conv2d {
 public:
  Conv2d() = default;
  Conv2d(ParameterSet<Scalar>& params, const std::string& name, const ConvOptions& opt, Rng& rng)
      : opt_(opt) {
    const Index fan_out = opt.out_channels * opt.kernel * opt.kernel;
    weight_ = params.add(name + ".weight",
                         kaiming_normal<Scalar>(opt.out_channels,
                                                opt.kernel * opt.kernel * opt.in_channels,
                                                static_cast<double>(fan_out), rng));
    if (opt.bias) bias_ = params.add(name + ".bias", Matrix<Scalar>::Zero(opt.out_channels, 1));
  }

  const ConvOptions& options() const { return opt_; }

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Mode mode) {
    if (x.channels != opt_.in_channels)
      throw ConfigError("conv expects " + std::to_string(opt_.in_channels) + " channels, got " +
                        std::to_string(x.channels));
    const Index ho = conv_output_size(x.height, opt_.kernel, opt_.stride, opt_.padding, opt_.dilation);
    const Index wo = conv_output_size(x.width, opt_.kernel, opt_.stride, opt_.padding, opt_.dilation);
    if (ho < 1 || wo < 1) throw ConfigError("input too small for convolution");
    in_n_ = x.batch;
    in_h_ = x.height;
    in_w_ = x.width;
    FeatureMap<Scalar> y;
    y.batch = x.batch;
    y.height = ho;
    y.width = wo;
    y.channels = opt_.out_channels;
    if (pointwise()) {
      y.data.noalias() = weight_->value * x.data;
      if (mode == Mode::kTrain) cols_ = x.data;
    } else {
      Matrix<Scalar> cols = im2col(x, ho, wo);
      y.data.noalias() = weight_->value * cols;
      if (mode == Mode::kTrain) cols_ = std::move(cols);
    }
    if (bias_ != nullptr) y.data.colwise() += bias_->value.col(0);
    cached_ = mode == Mode::kTrain;
    return y;
  }

  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dy) {
    require_cache(cached_, "Conv2d");
    if (weight_->trainable) weight_->grad.noalias() += dy.data * cols_.transpose();
    if (bias_ != nullptr && bias_->trainable) bias_->grad.col(0) += dy.data.rowwise().sum();
    FeatureMap<Scalar> dx(in_n_, in_h_, in_w_, opt_.in_channels);
    if (pointwise()) {
      dx.data.noalias() = weight_->value.transpose() * dy.data;
    } else {
      Matrix<Scalar> dcols = weight_->value.transpose() * dy.data;
      col2im(dcols, dy.height, dy.width, dx);
    }
    return dx;
  }

 private:
  bool pointwise() const { return opt_.kernel == 1 && opt_.stride == 1 && opt_.padding == 0; }

  Matrix<Scalar> im2col(const FeatureMap<Scalar>& x, Index ho, Index wo) const {
    const Index k = opt_.kernel, cin = opt_.in_channels;
    Matrix<Scalar> cols = Matrix<Scalar>::Zero(k * k * cin, x.batch * ho * wo);
    for (Index n = 0; n < x.batch; ++n)
      for (Index oy = 0; oy < ho; ++oy)
        for (Index ox = 0; ox < wo; ++ox) {
          const Index col = (n * ho + oy) * wo + ox;
          for (Index ky = 0; ky < k; ++ky) {
            const Index iy = oy * opt_.stride - opt_.padding + ky * opt_.dilation;
            if (iy < 0 || iy >= x.height) continue;
            for (Index kx = 0; kx < k; ++kx) {
              const Index ix = ox * opt_.stride - opt_.padding + kx * opt_.dilation;
              if (ix < 0 || ix >= x.width) continue;
              cols.block((ky * k + kx) * cin, col, cin, 1) = x.data.col(x.column(n, iy, ix));
            }
          }
        }
    return cols;
  }

  void col2im(const Matrix<Scalar>& dcols, Index ho, Index wo, FeatureMap<Scalar>& dx) const {
    const Index k = opt_.kernel, cin = opt_.in_channels;
    for (Index n = 0; n < dx.batch; ++n)
      for (Index oy = 0; oy < ho; ++oy)
        for (Index ox = 0; ox < wo; ++ox) {
          const Index col = (n * ho + oy) * wo + ox;
          for (Index ky = 0; ky < k; ++ky) {
            const Index iy = oy * opt_.stride - opt_.padding + ky * opt_.dilation;
            if (iy < 0 || iy >= dx.height) continue;
            for (Index kx = 0; kx < k; ++kx) {
              const Index ix = ox * opt_.stride - opt_.padding + kx * opt_.dilation;
              if (ix < 0 || ix >= dx.width) continue;
              dx.data.col(dx.column(n, iy, ix)) += dcols.block((ky * k + kx) * cin, col, cin, 1);
            }
          }
        }
  }

  ConvOptions opt_;
  Parameter<Scalar>* weight_ = nullptr;
  Parameter<Scalar>* bias_ = nullptr;
  Matrix<Scalar> cols_;
  Index in_n_ = 0, in_h_ = 0, in_w_ = 0;
  bool cached_ = false;
};

/// Per-channel batch normalization. Train mode normalizes with batch
/// statistics and updates the running estimates (momentum 0.1, unbiased
/// variance); eval mode uses the running estimates only.
template <typename Scalar>
class BatchNorm2d {
 public:
  static constexpr double kEps = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm2d() = default;
  BatchNorm2d(ParameterSet<Scalar>& params, const std::string& name, Index channels) {
    gamma_ = params.add(name + ".gamma", Matrix<Scalar>::Ones(channels, 1));
    beta_ = params.add(name + ".beta", Matrix<Scalar>::Zero(channels, 1));
    running_mean_ = params.add(name + ".running_mean", Matrix<Scalar>::Zero(channels, 1), true);
    running_var_ = params.add(name + ".running_var", Matrix<Scalar>::Ones(channels, 1), true);
  }

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Mode mode) {
    const Index m = x.pixels();
    Vector<Scalar> mean, var;
    if (mode == Mode::kTrain) {
      if (m < 2) throw DataError("batch norm needs more than one value per channel in training");
      mean = x.data.rowwise().mean();
      var = (x.data.colwise() - mean).array().square().rowwise().mean();
      const Scalar mom = static_cast<Scalar>(kMomentum);
      const Scalar unbias = static_cast<Scalar>(m) / static_cast<Scalar>(m - 1);
      running_mean_->value.col(0) = (1 - mom) * running_mean_->value.col(0) + mom * mean;
      running_var_->value.col(0) = (1 - mom) * running_var_->value.col(0) + mom * unbias * var;
    } else {
      mean = running_mean_->value.col(0);
      var = running_var_->value.col(0);
    }
    inv_std_ = (var.array() + static_cast<Scalar>(kEps)).rsqrt().matrix();
    FeatureMap<Scalar> y = x;
    y.data = inv_std_.asDiagonal() * (x.data.colwise() - mean);
    if (mode == Mode::kTrain) xhat_ = y.data;
    y.data = gamma_->value.col(0).asDiagonal() * y.data;
    y.data.colwise() += beta_->value.col(0);
    train_ = mode == Mode::kTrain;
    cached_ = true;
    return y;
  }

  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dy) {
    require_cache(cached_, "BatchNorm2d");
    FeatureMap<Scalar> dx = dy;
    if (!train_) {
      dx.data = (gamma_->value.col(0).cwiseProduct(inv_std_)).asDiagonal() * dy.data;
      return dx;
    }
    const Scalar m = static_cast<Scalar>(dy.pixels());
    const Vector<Scalar> sum_dy = dy.data.rowwise().sum();
    const Vector<Scalar> sum_dy_xhat = dy.data.cwiseProduct(xhat_).rowwise().sum();
    if (gamma_->trainable) gamma_->grad.col(0) += sum_dy_xhat;
    if (beta_->trainable) beta_->grad.col(0) += sum_dy;
    const Vector<Scalar> scale = gamma_->value.col(0).cwiseProduct(inv_std_) / m;
    Matrix<Scalar> t = dy.data * m;
    t.colwise() -= sum_dy;
    t -= sum_dy_xhat.asDiagonal() * xhat_;
    dx.data = scale.asDiagonal() * t;
    return dx;
  }

 private:
  Parameter<Scalar>* gamma_ = nullptr;
  Parameter<Scalar>* beta_ = nullptr;
  Parameter<Scalar>* running_mean_ = nullptr;
  Parameter<Scalar>* running_var_ = nullptr;
  Vector<Scalar> inv_std_;
  Matrix<Scalar> xhat_;
  bool train_ = false;
  bool cached_ = false;
};

template <typename Scalar>
class ReLU {
 public:
  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode) {
    Matrix<Scalar> y = x.cwiseMax(Scalar(0));
    if (mode == Mode::kTrain) out_ = y;
    cached_ = mode == Mode::kTrain;
    return y;
  }
  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Mode mode) {
    FeatureMap<Scalar> y = x;
    y.data = forward(x.data, mode);
    return y;
  }
  Matrix<Scalar> backward(const Matrix<Scalar>& dy) const {
    require_cache(cached_, "ReLU");
    return (out_.array() > Scalar(0)).select(dy, Scalar(0));
  }
  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dy) const {
    FeatureMap<Scalar> dx = dy;
    dx.data = backward(dy.data);
    return dx;
  }

 private:
  Matrix<Scalar> out_;
  bool cached_ = false;
};

/// Max pooling with implicit -inf padding. Ties resolve to the first
/// maximum in scan order.
template <typename Scalar>
class MaxPool2d {
 public:
  MaxPool2d(Index kernel = 3, Index stride = 2, Index padding = 1)
      : kernel_(kernel), stride_(stride), padding_(padding) {}

  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Mode mode) {
    const Index ho = conv_output_size(x.height, kernel_, stride_, padding_, 1);
    const Index wo = conv_output_size(x.width, kernel_, stride_, padding_, 1);
    if (ho < 1 || wo < 1) throw ConfigError("input too small for max pooling");
    FeatureMap<Scalar> y(x.batch, ho, wo, x.channels);
    argmax_.resize(x.channels, y.pixels());
    for (Index n = 0; n < x.batch; ++n)
      for (Index oy = 0; oy < ho; ++oy)
        for (Index ox = 0; ox < wo; ++ox) {
          const Index ocol = y.column(n, oy, ox);
          for (Index c = 0; c < x.channels; ++c) {
            Scalar best = -std::numeric_limits<Scalar>::infinity();
            Index best_col = -1;
            for (Index ky = 0; ky < kernel_; ++ky) {
              const Index iy = oy * stride_ - padding_ + ky;
              if (iy < 0 || iy >= x.height) continue;
              for (Index kx = 0; kx < kernel_; ++kx) {
                const Index ix = ox * stride_ - padding_ + kx;
                if (ix < 0 || ix >= x.width) continue;
                const Index icol = x.column(n, iy, ix);
                if (x.data(c, icol) > best || best_col < 0) {
                  best = x.data(c, icol);
                  best_col = icol;
                }
              }
            }
            y.data(c, ocol) = best;
            argmax_(c, ocol) = best_col;
          }
        }
    in_ = FeatureMap<Scalar>();
    in_.batch = x.batch;
    in_.height = x.height;
    in_.width = x.width;
    in_.channels = x.channels;
    cached_ = mode == Mode::kTrain;
    return y;
  }

  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dy) const {
    require_cache(cached_, "MaxPool2d");
    FeatureMap<Scalar> dx(in_.batch, in_.height, in_.width, in_.channels);
    for (Index col = 0; col < dy.data.cols(); ++col)
      for (Index c = 0; c < dy.channels; ++c) dx.data(c, argmax_(c, col)) += dy.data(c, col);
    return dx;
  }

 private:
  Index kernel_, stride_, padding_;
  Eigen::Matrix<Index, Eigen::Dynamic, Eigen::Dynamic> argmax_;
  FeatureMap<Scalar> in_;
  bool cached_ = false;
};

/// Spatial mean per channel; returns B x C (one row per image).
template <typename Scalar>
Matrix<Scalar> global_average_pool(const FeatureMap<Scalar>& x) {
  Matrix<Scalar> out(x.batch, x.channels);
  const Index hw = x.height * x.width;
  for (Index n = 0; n < x.batch; ++n)
    out.row(n) = x.data.middleCols(n * hw, hw).rowwise().mean().transpose();
  return out;
}

/// Adjoint of global_average_pool: spreads dpooled (B x C) over h x w.
template <typename Scalar>
FeatureMap<Scalar> global_average_pool_backward(const Matrix<Scalar>& dpooled, Index h, Index w) {
  FeatureMap<Scalar> dx(dpooled.rows(), h, w, dpooled.cols());
  const Index hw = h * w;
  for (Index n = 0; n < dpooled.rows(); ++n)
    dx.data.middleCols(n * hw, hw).colwise() = dpooled.row(n).transpose() / static_cast<Scalar>(hw);
  return dx;
}

/// Broadcast of B x C rows to every pixel of an h x w map.
template <typename Scalar>
FeatureMap<Scalar> broadcast_rows(const Matrix<Scalar>& rows, Index h, Index w) {
  FeatureMap<Scalar> y(rows.rows(), h, w, rows.cols());
  const Index hw = h * w;
  for (Index n = 0; n < rows.rows(); ++n) y.data.middleCols(n * hw, hw).colwise() = rows.row(n).transpose();
  return y;
}

template <typename Scalar>
Matrix<Scalar> broadcast_rows_backward(const FeatureMap<Scalar>& dy) {
  Matrix<Scalar> out(dy.batch, dy.channels);
  const Index hw = dy.height * dy.width;
  for (Index n = 0; n < dy.batch; ++n)
    out.row(n) = dy.data.middleCols(n * hw, hw).rowwise().sum().transpose();
  return out;
}

/// y = x W^T + b over row vectors (x is B x in).
template <typename Scalar>
class Linear {
 public:
  Linear() = default;
  Linear(ParameterSet<Scalar>& params, const std::string& name, Index in, Index out, Rng& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    weight_ = params.add(name + ".weight", uniform_init<Scalar>(out, in, bound, rng));
    bias_ = params.add(name + ".bias", uniform_init<Scalar>(out, 1, bound, rng));
  }

  Index in_features() const { return weight_->value.cols(); }
  Index out_features() const { return weight_->value.rows(); }
  Parameter<Scalar>& weight() { return *weight_; }
  Parameter<Scalar>& bias() { return *bias_; }

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode) {
    if (x.cols() != in_features())
      throw ConfigError("linear layer expects width " + std::to_string(in_features()) + ", got " +
                        std::to_string(x.cols()));
    Matrix<Scalar> y = x * weight_->value.transpose();
    y.rowwise() += bias_->value.col(0).transpose();
    if (mode == Mode::kTrain) x_ = x;
    cached_ = mode == Mode::kTrain;
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) {
    require_cache(cached_, "Linear");
    if (weight_->trainable) weight_->grad.noalias() += dy.transpose() * x_;
    if (bias_->trainable) bias_->grad.col(0) += dy.colwise().sum().transpose();
    return dy * weight_->value;
  }

 private:
  Parameter<Scalar>* weight_ = nullptr;
  Parameter<Scalar>* bias_ = nullptr;
  Matrix<Scalar> x_;
  bool cached_ = false;
};

/// Row-wise L2 normalization. Rows with norm below kGuardNorm are shifted by
/// kGuardEps in every component before normalizing, which yields a unit row
/// instead of NaN; each such event increments guard_count().
template <typename Scalar>
class L2Normalize {
 public:
  static constexpr double kGuardNorm = 1e-12;
  static constexpr double kGuardEps = 1e-6;

  Matrix<Scalar> forward(const Matrix<Scalar>& x, Mode mode) {
    Matrix<Scalar> shifted = x;
    norms_.resize(x.rows());
    for (Index i = 0; i < x.rows(); ++i) {
      Scalar n = x.row(i).norm();
      if (!(n >= static_cast<Scalar>(kGuardNorm))) {
        shifted.row(i).array() += static_cast<Scalar>(kGuardEps);
        n = shifted.row(i).norm();
        ++guard_count_;
      }
      norms_(i) = n;
    }
    Matrix<Scalar> y = norms_.cwiseInverse().asDiagonal() * shifted;
    if (mode == Mode::kTrain) y_ = y;
    cached_ = mode == Mode::kTrain;
    return y;
  }

  Matrix<Scalar> backward(const Matrix<Scalar>& dy) const {
    require_cache(cached_, "L2Normalize");
    const Vector<Scalar> dots = y_.cwiseProduct(dy).rowwise().sum();
    Matrix<Scalar> dx = dy - dots.asDiagonal() * y_;
    return norms_.cwiseInverse().asDiagonal() * dx;
  }

  long guard_count() const { return guard_count_; }

 private:
  Vector<Scalar> norms_;
  Matrix<Scalar> y_;
  long guard_count_ = 0;
  bool cached_ = false;
};

/// Bilinear resize with half-pixel centres (align_corners = false) and its
/// adjoint.
template <typename Scalar>
class BilinearUpsample {
 public:
  FeatureMap<Scalar> forward(const FeatureMap<Scalar>& x, Index out_h, Index out_w) {
    in_h_ = x.height;
    in_w_ = x.width;
    ys_ = taps(x.height, out_h);
    xs_ = taps(x.width, out_w);
    FeatureMap<Scalar> y(x.batch, out_h, out_w, x.channels);
    for (Index n = 0; n < x.batch; ++n)
      for (Index oy = 0; oy < out_h; ++oy) {
        const Tap& ty = ys_[oy];
        for (Index ox = 0; ox < out_w; ++ox) {
          const Tap& tx = xs_[ox];
          auto out = y.data.col(y.column(n, oy, ox));
          out = (1 - ty.w) * ((1 - tx.w) * x.data.col(x.column(n, ty.i0, tx.i0)) +
                              tx.w * x.data.col(x.column(n, ty.i0, tx.i1))) +
                ty.w * ((1 - tx.w) * x.data.col(x.column(n, ty.i1, tx.i0)) +
                        tx.w * x.data.col(x.column(n, ty.i1, tx.i1)));
        }
      }
    return y;
  }

  FeatureMap<Scalar> backward(const FeatureMap<Scalar>& dy) const {
    FeatureMap<Scalar> dx(dy.batch, in_h_, in_w_, dy.channels);
    for (Index n = 0; n < dy.batch; ++n)
      for (Index oy = 0; oy < dy.height; ++oy) {
        const Tap& ty = ys_[oy];
        for (Index ox = 0; ox < dy.width; ++ox) {
          const Tap& tx = xs_[ox];
          const auto g = dy.data.col(dy.column(n, oy, ox));
          dx.data.col(dx.column(n, ty.i0, tx.i0)) += (1 - ty.w) * (1 - tx.w) * g;
          dx.data.col(dx.column(n, ty.i0, tx.i1)) += (1 - ty.w) * tx.w * g;
          dx.data.col(dx.column(n, ty.i1, tx.i0)) += ty.w * (1 - tx.w) * g;
          dx.data.col(dx.column(n, ty.i1, tx.i1)) += ty.w * tx.w * g;
        }
      }
    return dx;
  }

 private:
  struct Tap {
    Index i0, i1;
    Scalar w;
  };

  static std::vector<Tap> taps(Index in, Index out) {
    std::vector<Tap> t(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / static_cast<double>(out);
    for (Index o = 0; o < out; ++o) {
      const double f = std::max(0.0, (o + 0.5) * scale - 0.5);
      const Index i0 = std::min(static_cast<Index>(f), in - 1);
      const Index i1 = std::min(i0 + 1, in - 1);
      t[static_cast<std::size_t>(o)] = {i0, i1, static_cast<Scalar>(f - static_cast<double>(i0))};
    }
    return t;
  }

  Index in_h_ = 0, in_w_ = 0;
  std::vector<Tap> ys_, xs_;
};

template <typename Scalar>
FeatureMap<Scalar> concat_channels(const std::vector<FeatureMap<Scalar>>& parts) {
  if (parts.empty()) throw ConfigError("nothing to concatenate");
  Index total = 0;
  for (const auto& p : parts) {
    if (p.batch != parts[0].batch || p.height != parts[0].height || p.width != parts[0].width)
      throw ConfigError("concatenated maps differ in shape");
    total += p.channels;
  }
  FeatureMap<Scalar> y(parts[0].batch, parts[0].height, parts[0].width, total);
  Index row = 0;
  for (const auto& p : parts) {
    y.data.middleRows(row, p.channels) = p.data;
    row += p.channels;
  }
  return y;
}

template <typename Scalar>
FeatureMap<Scalar> slice_channels(const FeatureMap<Scalar>& x, Index first, Index count) {
  FeatureMap<Scalar> y;
  y.batch = x.batch;
  y.height = x.height;
  y.width = x.width;
  y.channels = count;
  y.data = x.data.middleRows(first, count);
  return y;
}

/// Top-left h x w window of every image.
template <typename Scalar>
FeatureMap<Scalar> crop(const FeatureMap<Scalar>& x, Index h, Index w) {
  if (h > x.height || w > x.width) throw ConfigError("crop larger than input");
  FeatureMap<Scalar> y(x.batch, h, w, x.channels);
  for (Index n = 0; n < x.batch; ++n)
    for (Index r = 0; r < h; ++r) y.data.middleCols(y.column(n, r, 0), w) = x.data.middleCols(x.column(n, r, 0), w);
  return y;
}

template <typename Scalar>
FeatureMap<Scalar> crop_backward(const FeatureMap<Scalar>& dy, Index h, Index w) {
  FeatureMap<Scalar> dx(dy.batch, h, w, dy.channels);
  for (Index n = 0; n < dy.batch; ++n)
    for (Index r = 0; r < dy.height; ++r)
      dx.data.middleCols(dx.column(n, r, 0), dy.width) = dy.data.middleCols(dy.column(n, r, 0), dy.width);
  return dx;
}

}  // namespace volcon::nn

#endif  // VOLCON_NN_LAYERS_HPP_
