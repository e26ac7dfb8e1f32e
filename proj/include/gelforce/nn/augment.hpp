// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <random>

#include "gelforce/image.hpp"

namespace gelforce::nn {

/// Photometric augmentation ranges. Scales are drawn from [1 - r, 1 + r],
/// the hue rotation from [-hue, hue] turns and the noise deviation from
/// [0, noise_max].
struct AugmentConfig {
  double noise_max = 0.02;
  double brightness = 0.2;
  double contrast = 0.2;
  double saturation = 0.2;
  double hue = 0.05;

  static AugmentConfig none() { return {0.0, 0.0, 0.0, 0.0, 0.0}; }
  void check() const;
};

/// Gaussian pixel noise, then brightness, contrast, saturation and hue,
/// clamped to [0, 1]. Operations whose drawn parameter is neutral are
/// skipped, so zero ranges leave the image untouched.
Image augment(const Image& img, const AugmentConfig& cfg, std::mt19937_64& rng);

}  // namespace gelforce::nn
