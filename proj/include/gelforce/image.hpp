// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// RGB images in [0, 1] and their 8-bit PNG / PPM (P6) files.

#pragma once

#include <string>
#include <vector>

namespace gelforce {

/// Interleaved RGB, row-major, values in [0, 1].
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;

  Image() = default;
  Image(int w, int h, float fill = 0.0f) : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  float& at(int y, int x, int c) { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  float at(int y, int x, int c) const { return rgb[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

/// Chooses PNG or PPM from the extension (".png", ".ppm"). Values are
/// clamped and rounded to 8 bits on write. Throws FormatError.
Image read_image(const std::string& path);
void write_image(const std::string& path, const Image& img);

Image read_png(const std::string& path);
void write_png(const std::string& path, const Image& img);
Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& img);

}  // namespace gelforce
