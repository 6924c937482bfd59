// Copyright 2026 The bowreid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Little-endian framing helpers shared by the codebook, signature and index
// file formats.

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>
#include <type_traits>

#include "bowreid/error.hpp"

namespace bowreid::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats assume a little-endian host");

template <typename T>
void write_pod(std::ostream& os, T value) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> buf;
  std::memcpy(buf.data(), &value, sizeof(T));
  os.write(buf.data(), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is, std::string_view what) {
  static_assert(std::is_trivially_copyable_v<T>);
  std::array<char, sizeof(T)> buf;
  if (!is.read(buf.data(), sizeof(T))) {
    throw DataError("truncated file while reading " + std::string(what));
  }
  T value;
  std::memcpy(&value, buf.data(), sizeof(T));
  return value;
}

inline void write_magic(std::ostream& os, std::string_view magic) {
  os.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

inline void expect_magic(std::istream& is, std::string_view magic) {
  std::string got(magic.size(), '\0');
  if (!is.read(got.data(), static_cast<std::streamsize>(got.size())) ||
      got != magic) {
    throw DataError("bad magic: expected '" + std::string(magic) + "'");
  }
}

}  // namespace bowreid::io
