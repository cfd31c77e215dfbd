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
#include "volcon/npy.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "volcon/errors.hpp"

namespace volcon::npy {
namespace {

constexpr std::array<char, 6> kMagic = {'\x93', 'N', 'U', 'M', 'P', 'Y'};

std::string strip(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Returns the raw text of the value for `key` in a python dict literal.
std::string dict_value(const std::string& dict, const std::string& key) {
  const std::string quoted[] = {"'" + key + "'", "\"" + key + "\""};
  std::size_t pos = std::string::npos;
  for (const auto& q : quoted) {
    pos = dict.find(q);
    if (pos != std::string::npos) {
      pos += q.size();
      break;
    }
  }
  if (pos == std::string::npos) throw FormatError("header lacks key '" + key + "'");
  pos = dict.find(':', pos);
  if (pos == std::string::npos) throw FormatError("header key '" + key + "' has no value");
  ++pos;
  // The value ends at the first top-level comma or closing brace.
  int depth = 0;
  std::size_t end = pos;
  for (; end < dict.size(); ++end) {
    const char c = dict[end];
    if (c == '(' || c == '[') ++depth;
    if (c == ')' || c == ']') --depth;
    if (depth == 0 && (c == ',' || c == '}')) break;
  }
  return strip(dict.substr(pos, end - pos));
}

bool host_is_little() { return std::endian::native == std::endian::little; }

double decode(const unsigned char* p, const Header& h) {
  unsigned char buf[8];
  std::memcpy(buf, p, h.item_size);
  const bool swap = h.item_size > 1 && ((h.byte_order == '<') != host_is_little()) &&
                    h.byte_order != '|' && h.byte_order != '=';
  if (swap) std::reverse(buf, buf + h.item_size);
  switch (h.kind) {
    case 'f':
      if (h.item_size == 4) {
        float v;
        std::memcpy(&v, buf, 4);
        return v;
      } else {
        double v;
        std::memcpy(&v, buf, 8);
        return v;
      }
    case 'b':
      return buf[0] != 0 ? 1.0 : 0.0;
    case 'i':
      switch (h.item_size) {
        case 1: { std::int8_t v; std::memcpy(&v, buf, 1); return v; }
        case 2: { std::int16_t v; std::memcpy(&v, buf, 2); return v; }
        case 4: { std::int32_t v; std::memcpy(&v, buf, 4); return v; }
        default: { std::int64_t v; std::memcpy(&v, buf, 8); return static_cast<double>(v); }
      }
    default:
      switch (h.item_size) {
        case 1: return buf[0];
        case 2: { std::uint16_t v; std::memcpy(&v, buf, 2); return v; }
        case 4: { std::uint32_t v; std::memcpy(&v, buf, 4); return v; }
        default: { std::uint64_t v; std::memcpy(&v, buf, 8); return static_cast<double>(v); }
      }
  }
}

template <typename T>
Array<T> read_as(const std::string& path, const std::function<void(double)>& check) {
  if (!std::filesystem::exists(path)) throw MissingArtifactError("'" + path + "'");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path + "'");
  const Header h = read_header(in);
  const std::size_t n = h.count();
  std::vector<unsigned char> raw(n * h.item_size);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    throw FormatError("'" + path + "' is truncated");

  Array<T> out;
  out.shape = h.shape;
  out.data.resize(n);
  const std::size_t rank = h.shape.size();
  // File-order element k maps to C-order index through the fortran strides.
  std::vector<std::size_t> c_strides(rank, 1);
  for (std::size_t d = rank; d-- > 1;) c_strides[d - 1] = c_strides[d] * h.shape[d];
  std::vector<std::size_t> idx(rank, 0);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = decode(raw.data() + k * h.item_size, h);
    if (check) check(v);
    std::size_t dst = k;
    if (h.fortran_order) {
      dst = 0;
      for (std::size_t d = 0; d < rank; ++d) dst += idx[d] * c_strides[d];
      for (std::size_t d = 0; d < rank; ++d) {
        if (++idx[d] < h.shape[d]) break;
        idx[d] = 0;
      }
    }
    out.data[dst] = static_cast<T>(v);
  }
  return out;
}

void write_raw(const std::string& path, const Header& h, const void* data,
               std::size_t nbytes) {
  std::string dict = format_header_dict(h);
  // magic(6) + version(2) + len(2) + dict + '\n' padded to 64 bytes.
  const std::size_t unpadded = 10 + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict.push_back('\n');
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out.write(kMagic.data(), kMagic.size());
  const char version[2] = {1, 0};
  out.write(version, 2);
  const auto len = static_cast<std::uint16_t>(dict.size());
  const char len_le[2] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_le, 2);
  out.write(dict.data(), static_cast<std::streamsize>(dict.size()));
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(nbytes));
  if (!out) throw DataError("short write to '" + path + "'");
}

}  // namespace

std::size_t Header::count() const {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  return n;
}

Header parse_header_dict(const std::string& dict) {
  Header h;
  std::string descr = dict_value(dict, "descr");
  if (descr.size() < 2 || (descr.front() != '\'' && descr.front() != '"'))
    throw FormatError("descr is not a string: " + descr);
  descr = descr.substr(1, descr.size() - 2);
  if (descr.size() < 3) throw FormatError("unsupported descr '" + descr + "'");
  h.byte_order = descr[0];
  h.kind = descr[1];
  if (std::string("<>|=").find(h.byte_order) == std::string::npos)
    throw FormatError("unsupported byte order in '" + descr + "'");
  try {
    h.item_size = static_cast<std::size_t>(std::stoul(descr.substr(2)));
  } catch (const std::exception&) {
    throw FormatError("unsupported descr '" + descr + "'");
  }
  const bool ok =
      (h.kind == 'f' && (h.item_size == 4 || h.item_size == 8)) ||
      ((h.kind == 'i' || h.kind == 'u') &&
       (h.item_size == 1 || h.item_size == 2 || h.item_size == 4 || h.item_size == 8)) ||
      (h.kind == 'b' && h.item_size == 1);
  if (!ok) throw FormatError("unsupported dtype '" + descr + "'");

  const std::string fo = dict_value(dict, "fortran_order");
  if (fo == "True") {
    h.fortran_order = true;
  } else if (fo == "False") {
    h.fortran_order = false;
  } else {
    throw FormatError("bad fortran_order '" + fo + "'");
  }

  const std::string shape = dict_value(dict, "shape");
  if (shape.size() < 2 || shape.front() != '(' || shape.back() != ')')
    throw FormatError("bad shape '" + shape + "'");
  std::stringstream ss(shape.substr(1, shape.size() - 2));
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = strip(item);
    if (item.empty()) continue;
    if (!std::all_of(item.begin(), item.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); }))
      throw FormatError("bad shape entry '" + item + "'");
    h.shape.push_back(static_cast<std::size_t>(std::stoull(item)));
  }
  return h;
}

std::string format_header_dict(const Header& h) {
  std::ostringstream os;
  os << "{'descr': '" << h.byte_order << h.kind << h.item_size
     << "', 'fortran_order': " << (h.fortran_order ? "True" : "False") << ", 'shape': (";
  for (std::size_t i = 0; i < h.shape.size(); ++i) {
    os << h.shape[i];
    if (h.shape.size() == 1 || i + 1 < h.shape.size()) os << ",";
    if (i + 1 < h.shape.size()) os << " ";
  }
  os << "), }";
  return os.str();
}

Header read_header(std::istream& in) {
  std::array<char, 6> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw FormatError("missing NPY magic string");
  unsigned char version[2];
  in.read(reinterpret_cast<char*>(version), 2);
  if (!in) throw FormatError("truncated NPY version");
  std::size_t header_len = 0;
  if (version[0] == 1 && version[1] == 0) {
    unsigned char len[2];
    in.read(reinterpret_cast<char*>(len), 2);
    header_len = static_cast<std::size_t>(len[0]) | (static_cast<std::size_t>(len[1]) << 8);
  } else {
    throw FormatError("unsupported NPY version " + std::to_string(version[0]) + "." +
                      std::to_string(version[1]));
  }
  if (!in) throw FormatError("truncated NPY header length");
  std::string dict(header_len, '\0');
  in.read(dict.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw FormatError("truncated NPY header");
  return parse_header_dict(dict);
}

Array<float> read_float32(const std::string& path, const std::function<void(double)>& check) {
  return read_as<float>(path, check);
}

Array<std::int32_t> read_int32(const std::string& path,
                               const std::function<void(double)>& check) {
  return read_as<std::int32_t>(path, check);
}

void write(const std::string& path, const std::vector<std::size_t>& shape,
           const std::vector<float>& data) {
  static_assert(std::numeric_limits<float>::is_iec559);
  Header h{host_is_little() ? '<' : '>', 'f', 4, false, shape};
  if (h.count() != data.size()) throw DataError("shape does not match data size");
  write_raw(path, h, data.data(), data.size() * sizeof(float));
}

void write(const std::string& path, const std::vector<std::size_t>& shape,
           const std::vector<std::int32_t>& data) {
  Header h{host_is_little() ? '<' : '>', 'i', 4, false, shape};
  if (h.count() != data.size()) throw DataError("shape does not match data size");
  write_raw(path, h, data.data(), data.size() * sizeof(std::int32_t));
}

}  // namespace volcon::npy
