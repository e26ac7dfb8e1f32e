// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/nn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Core>
#include <Eigen/LU>

#include "gelforce/error.hpp"

namespace gelforce::nn {

namespace {

constexpr double kLuma[3] = {0.299, 0.587, 0.114};

double draw(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

float luma(const float* p) { return static_cast<float>(kLuma[0] * p[0] + kLuma[1] * p[1] + kLuma[2] * p[2]); }

// Rotation of the chroma plane in YIQ space.
Eigen::Matrix3f hue_matrix(double turns) {
  Eigen::Matrix3f to_yiq;
  to_yiq << 0.299f, 0.587f, 0.114f, 0.595716f, -0.274453f, -0.321263f, 0.211456f, -0.522591f, 0.311135f;
  const double a = 2.0 * std::numbers::pi * turns;
  Eigen::Matrix3f rot = Eigen::Matrix3f::Identity();
  rot(1, 1) = rot(2, 2) = static_cast<float>(std::cos(a));
  rot(1, 2) = static_cast<float>(-std::sin(a));
  rot(2, 1) = static_cast<float>(std::sin(a));
  return to_yiq.inverse() * rot * to_yiq;
}

}  // namespace

void AugmentConfig::check() const {
  for (double r : {brightness, contrast, saturation}) {
    if (!(r >= 0.0 && r < 1.0)) throw ValidationError("augmentation scale ranges must lie in [0, 1)");
  }
  if (!(noise_max >= 0.0) || !(hue >= 0.0 && hue <= 0.5)) throw ValidationError("bad noise or hue range");
}

Image augment(const Image& img, const AugmentConfig& cfg, std::mt19937_64& rng) {
  cfg.check();
  // Fixed draw order keeps the stream aligned whatever the ranges are.
  const double sigma = draw(rng, 0.0, cfg.noise_max);
  const double b = draw(rng, 1.0 - cfg.brightness, 1.0 + cfg.brightness);
  const double c = draw(rng, 1.0 - cfg.contrast, 1.0 + cfg.contrast);
  const double s = draw(rng, 1.0 - cfg.saturation, 1.0 + cfg.saturation);
  const double h = draw(rng, -cfg.hue, cfg.hue);

  Image out = img;
  auto& v = out.rgb;
  const std::size_t pixels = v.size() / 3;
  if (sigma > 0.0) {
    std::normal_distribution<double> n(0.0, sigma);
    for (auto& x : v) x += static_cast<float>(n(rng));
  }
  if (b != 1.0) {
    for (auto& x : v) x *= static_cast<float>(b);
  }
  if (c != 1.0 && pixels > 0) {
    double mean = 0.0;
    for (std::size_t i = 0; i < pixels; ++i) mean += luma(&v[3 * i]);
    mean /= static_cast<double>(pixels);
    for (auto& x : v) x = static_cast<float>((x - mean) * c + mean);
  }
  if (s != 1.0) {
    for (std::size_t i = 0; i < pixels; ++i) {
      float* p = &v[3 * i];
      const float g = luma(p);
      for (int k = 0; k < 3; ++k) p[k] = static_cast<float>(g + s * (p[k] - g));
    }
  }
  if (h != 0.0) {
    const Eigen::Matrix3f m = hue_matrix(h);
    for (std::size_t i = 0; i < pixels; ++i) {
      Eigen::Map<Eigen::Vector3f> p(&v[3 * i]);
      p = m * p.eval();
    }
  }
  for (auto& x : v) x = std::clamp(x, 0.0f, 1.0f);
  return out;
}

}  // namespace gelforce::nn
