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
#include "volcon/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace volcon {
namespace {

using json = nlohmann::json;
constexpr char kMagic[8] = {'V', 'O', 'L', 'C', 'K', 'P', 'T', '1'};

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

template <typename T>
T get_le(const std::string& in, std::size_t pos) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i)
    v |= static_cast<T>(static_cast<unsigned char>(in[pos + i])) << (8 * i);
  return v;
}

void put_float(std::string& out, float f) {
  std::uint32_t bits;
  std::memcpy(&bits, &f, 4);
  put_le(out, bits);
}

float get_float(const std::string& in, std::size_t pos) {
  const auto bits = get_le<std::uint32_t>(in, pos);
  float f;
  std::memcpy(&f, &bits, 4);
  return f;
}

}  // namespace

std::string serialize_checkpoint(const ModelCheckpoint& ckpt) {
  json header;
  header["format_version"] = kCheckpointFormatVersion;
  header["stage"] = ckpt.stage;
  header["epoch"] = ckpt.epoch;
  header["seed"] = ckpt.seed;
  header["specs"] = ckpt.specs;
  header["metrics"] = ckpt.metrics;
  header["extra"] = ckpt.extra;
  json tensors = json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : ckpt.tensors) {
    tensors.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(m.size()) * 4;
  }
  header["tensors"] = tensors;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kCheckpointFormatVersion);
  put_le<std::uint64_t>(out, text.size());
  out += text;
  out.reserve(out.size() + offset);
  for (const auto& [name, m] : ckpt.tensors)
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) put_float(out, m(r, c));
  return out;
}

ModelCheckpoint deserialize_checkpoint(const std::string& bytes) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw FormatError("not a volcon checkpoint");
  const auto version = get_le<std::uint32_t>(bytes, 8);
  if (version != kCheckpointFormatVersion)
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get_le<std::uint64_t>(bytes, 12);
  if (20 + header_len > bytes.size()) throw FormatError("truncated checkpoint header");
  json header;
  try {
    header = json::parse(bytes.substr(20, header_len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  const std::size_t payload = 20 + header_len;
  ModelCheckpoint ckpt;
  try {
    ckpt.stage = header.at("stage").get<std::string>();
    ckpt.epoch = header.at("epoch").get<int>();
    ckpt.seed = header.at("seed").get<std::uint64_t>();
    ckpt.specs = header.at("specs");
    ckpt.metrics = header.at("metrics");
    ckpt.extra = header.at("extra");
    for (const auto& t : header.at("tensors")) {
      const auto rows = t.at("rows").get<Eigen::Index>();
      const auto cols = t.at("cols").get<Eigen::Index>();
      const auto off = t.at("offset").get<std::uint64_t>();
      if (payload + off + static_cast<std::uint64_t>(rows * cols) * 4 > bytes.size())
        throw FormatError("truncated tensor payload");
      Eigen::MatrixXf m(rows, cols);
      std::size_t pos = payload + off;
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c, pos += 4) m(r, c) = get_float(bytes, pos);
      ckpt.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("bad checkpoint header: ") + e.what());
  }
  return ckpt;
}

void save_checkpoint(const std::string& path, const ModelCheckpoint& ckpt) {
  const std::string bytes = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint '" + path + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("short write to '" + path + "'");
}

ModelCheckpoint load_checkpoint(const std::string& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("checkpoint '" + path + "'");
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize_checkpoint(ss.str());
}

}  // namespace volcon
