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
#ifndef VOLCON_CHECKPOINT_HPP_
#define VOLCON_CHECKPOINT_HPP_

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>

#include "json.hpp"
#include "volcon/errors.hpp"
#include "volcon/nn/tensor.hpp"

namespace volcon {

// Checkpoint container, format version 1:
//
//   bytes 0..7    magic "VOLCKPT1"
//   bytes 8..11   uint32 little-endian format version (1)
//   bytes 12..19  uint64 little-endian header length L
//   next L bytes  UTF-8 JSON header
//   remainder     tensor payloads, float32 little-endian, row-major, in the
//                 order listed by header["tensors"]
//
// The header holds {"format_version", "stage", "epoch", "seed", "specs",
// "metrics", "extra", "tensors": [{"name", "rows", "cols", "offset"}]}, where
// offset counts bytes from the start of the payload section.
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct ModelCheckpoint {
  std::map<std::string, Eigen::MatrixXf> tensors;
  nlohmann::json specs = nlohmann::json::object();
  std::string stage = "pretrain";  // "pretrain" or "finetune"
  int epoch = 0;
  std::uint64_t seed = 0;
  nlohmann::json metrics = nlohmann::json::object();
  nlohmann::json extra = nlohmann::json::object();
};

std::string serialize_checkpoint(const ModelCheckpoint& ckpt);
ModelCheckpoint deserialize_checkpoint(const std::string& bytes);

void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt);
/// Throws MissingArtifactError when the file does not exist.
ModelCheckpoint load_checkpoint(const std::string& path);

/// Copies every parameter and buffer of `params` into the checkpoint.
template <typename Scalar>
void export_parameters(const nn::ParameterSet<Scalar>& params, ModelCheckpoint& ckpt) {
  for (const auto& [name, p] : params.entries()) ckpt.tensors[name] = p.value.template cast<float>();
}

/// Loads every parameter of `params` from the checkpoint. Missing names or
/// shape mismatches are ConfigErrors (incompatible checkpoint).
template <typename Scalar>
void import_parameters(nn::ParameterSet<Scalar>& params, const ModelCheckpoint& ckpt) {
  for (auto& [name, p] : params.entries()) {
    auto it = ckpt.tensors.find(name);
    if (it == ckpt.tensors.end())
      throw ConfigError("incompatible checkpoint: missing parameter '" + name + "'");
    if (it->second.rows() != p.value.rows() || it->second.cols() != p.value.cols())
      throw ConfigError("incompatible checkpoint: shape mismatch for '" + name + "'");
    p.value = it->second.template cast<Scalar>();
  }
}

}  // namespace volcon

#endif  // VOLCON_CHECKPOINT_HPP_
