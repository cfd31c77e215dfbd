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
#ifndef VOLCON_NPY_HPP_
#define VOLCON_NPY_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <istream>
#include <string>
#include <vector>

namespace volcon::npy {

// Parsed NPY header. Only the subset of dtypes that can hold seismic
// amplitudes or class labels is accepted: bool, signed/unsigned integers of
// 1/2/4/8 bytes and 4/8 byte IEEE floats, in either byte order.
struct Header {
  char byte_order = '<';  // '<', '>' or '|'
  char kind = 'f';        // 'f', 'i', 'u' or 'b'
  std::size_t item_size = 4;
  bool fortran_order = false;
  std::vector<std::size_t> shape;

  std::size_t count() const;
  bool is_integral() const { return kind != 'f'; }
};

template <typename T>
struct Array {
  std::vector<std::size_t> shape;
  std::vector<T> data;  // C order
};

/// Parses the magic string, version and header dict. Leaves the stream
/// positioned at the first data byte. Throws FormatError.
Header read_header(std::istream& in);

/// Parses a header dict literal such as
/// "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 3), }".
Header parse_header_dict(const std::string& dict);

std::string format_header_dict(const Header& header);

// Reads an array, converting every element through double. The optional
// check sees each value (in file order) before the narrowing conversion.
Array<float> read_float32(const std::string& path,
                          const std::function<void(double)>& check = {});
Array<std::int32_t> read_int32(const std::string& path,
                               const std::function<void(double)>& check = {});

void write(const std::string& path, const std::vector<std::size_t>& shape,
           const std::vector<float>& data);
void write(const std::string& path, const std::vector<std::size_t>& shape,
           const std::vector<std::int32_t>& data);

}  // namespace volcon::npy

#endif  // VOLCON_NPY_HPP_
