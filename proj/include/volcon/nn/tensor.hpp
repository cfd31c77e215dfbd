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
#ifndef VOLCON_NN_TENSOR_HPP_
#define VOLCON_NN_TENSOR_HPP_

#include <Eigen/Core>
#include <map>
#include <string>
#include <utility>

#include "volcon/errors.hpp"

namespace volcon::nn {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

enum class Mode { kTrain, kEval };

// A batch of images with channels. data is channels x (batch*height*width)
// in column-major order, so each column holds one pixel's channel vector and
// the memory layout is NHWC.
template <typename Scalar>
struct FeatureMap {
  Index batch = 0;
  Index height = 0;
  Index width = 0;
  Index channels = 0;
  Matrix<Scalar> data;

  FeatureMap() = default;
  FeatureMap(Index n, Index h, Index w, Index c)
      : batch(n), height(h), width(w), channels(c), data(Matrix<Scalar>::Zero(c, n * h * w)) {}

  Index pixels() const { return batch * height * width; }
  Index column(Index n, Index y, Index x) const { return (n * height + y) * width + x; }
  Scalar& operator()(Index n, Index y, Index x, Index c) { return data(c, column(n, y, x)); }
  Scalar operator()(Index n, Index y, Index x, Index c) const { return data(c, column(n, y, x)); }

  bool same_shape(const FeatureMap& o) const {
    return batch == o.batch && height == o.height && width == o.width && channels == o.channels;
  }

  template <typename Other>
  FeatureMap<Other> cast() const {
    FeatureMap<Other> out;
    out.batch = batch;
    out.height = height;
    out.width = width;
    out.channels = channels;
    out.data = data.template cast<Other>();
    return out;
  }
};

template <typename Scalar>
struct Parameter {
  Matrix<Scalar> value;
  Matrix<Scalar> grad;
  bool trainable = true;
  // Buffers (batch-norm running statistics) are persisted but never receive
  // gradients.
  bool buffer = false;
};

/// Named parameters of one network. Node-based storage keeps element
/// addresses stable, so layers may hold raw pointers into it across moves.
template <typename Scalar>
class ParameterSet {
 public:
  using Map = std::map<std::string, Parameter<Scalar>>;

  Parameter<Scalar>* add(const std::string& name, Matrix<Scalar> init, bool buffer = false) {
    if (params_.count(name) != 0) throw ConfigError("duplicate parameter '" + name + "'");
    Parameter<Scalar> p;
    p.grad = Matrix<Scalar>::Zero(init.rows(), init.cols());
    p.value = std::move(init);
    p.buffer = buffer;
    p.trainable = !buffer;
    return &params_.emplace(name, std::move(p)).first->second;
  }

  Parameter<Scalar>& at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  const Parameter<Scalar>& at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ConfigError("unknown parameter '" + name + "'");
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  void zero_grad() {
    for (auto& [name, p] : params_) p.grad.setZero();
  }
  void set_trainable(bool on) {
    for (auto& [name, p] : params_)
      if (!p.buffer) p.trainable = on;
  }
  Index count() const {
    Index n = 0;
    for (const auto& [name, p] : params_) n += p.value.size();
    return n;
  }

  Map& entries() { return params_; }
  const Map& entries() const { return params_; }

 private:
  Map params_;
};

}  // namespace volcon::nn

#endif  // VOLCON_NN_TENSOR_HPP_
