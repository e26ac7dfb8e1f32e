// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Little-endian scalar I/O for the binary file formats.

#pragma once

#include <algorithm>
#include <bit>
#include <cstring>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "gelforce/error.hpp"

namespace gelforce::binio {

static_assert(std::numeric_limits<float>::is_iec559);

template <typename T>
void put_le(std::ostream& out, T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  out.write(reinterpret_cast<const char*>(b), sizeof(T));
}

/// Throws FormatError "<format> truncated in <what>" at end of input.
template <typename T>
T get_le(std::istream& in, const char* format, const char* what) {
  unsigned char b[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(b), sizeof(T))) {
    throw FormatError(std::string(format) + " truncated in " + what);
  }
  if constexpr (std::endian::native == std::endian::big) std::reverse(b, b + sizeof(T));
  T v;
  std::memcpy(&v, b, sizeof(T));
  return v;
}

}  // namespace gelforce::binio
