// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// U-net from sensor images to normalized force grids.

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "gelforce/labeling.hpp"
#include "gelforce/nn/tensor.hpp"

namespace gelforce::nn {

struct UNetConfig {
  int input_height = 240;
  int input_width = 320;
  int input_channels = 3;
  int depth = 4;           // encoder blocks; the decoder mirrors them
  int width = 16;          // channels of the first encoder block
  Resolution output{24, 32};
  std::string upsample = "nearest";

  /// Throws ValidationError unless the input is divisible by 2^depth and
  /// the output grid is no larger than the input.
  void check() const;
  friend bool operator==(const UNetConfig&, const UNetConfig&) = default;
};

void to_json(nlohmann::json& j, const UNetConfig& c);
void from_json(const nlohmann::json& j, UNetConfig& c);

/// Per-channel image statistics used to standardize network inputs.
struct ImageStats {
  std::array<double, 3> mean{0.0, 0.0, 0.0};
  std::array<double, 3> stddev{1.0, 1.0, 1.0};
  friend bool operator==(const ImageStats&, const ImageStats&) = default;
};

template <typename T>
using TensorMap = std::map<std::string, Tensor<T>>;

/// Expected parameter names and shapes for a configuration.
std::map<std::string, Tensor<float>::Shape> parameter_shapes(const UNetConfig& c);

template <typename T>
struct UNetParams {
  UNetConfig config;
  TensorMap<T> tensors;
  NormalizationConstants constants;
  ImageStats image_stats;

  /// Throws FormatError naming the first missing, unexpected or misshapen
  /// tensor, or ValidationError for non-finite values.
  void check() const;
  std::size_t parameter_count() const;

  template <typename U>
  UNetParams<U> cast() const {
    UNetParams<U> out{config, {}, constants, image_stats};
    for (const auto& [name, t] : tensors) out.tensors.emplace(name, t.template cast<U>());
    return out;
  }
};

/// Kaiming-uniform kernels (bound sqrt(6 / fan_in)) and zero biases. The
/// head bound is further scaled by output cells over input pixels.
template <typename T>
UNetParams<T> init_unet(const UNetConfig& c, std::uint64_t seed);

/// All-zero parameters.
template <typename T>
UNetParams<T> zero_unet(const UNetConfig& c);

/// Intermediate values kept by the forward pass for the backward pass.
template <typename T>
struct UNetTape {
  struct Block {
    Tensor<T> in, a1, a2;  // block input and the two relu outputs
  };
  std::vector<Block> enc;
  std::vector<std::vector<int>> pool_index;
  Block mid;
  std::vector<Tensor<T>> dec_up_in;  // upsampled decoder inputs
  std::vector<int> skip_channels;
  std::vector<Block> dec;            // `in` is the skip concatenation
  Tensor<T> head_in;
  Tensor<T> full;                    // head output before the resize
};

/// Forward pass on standardized input (N, 3, H0, W0). Returns
/// (N, 3, out_h, out_w). The tape, when given, is overwritten.
template <typename T>
Tensor<T> unet_forward(const UNetParams<T>& p, const Tensor<T>& x, UNetTape<T>* tape = nullptr);

/// Accumulates d loss / d params into `grads` (created with zero tensors
/// for missing names) given d loss / d output.
template <typename T>
void unet_backward(const UNetParams<T>& p, const UNetTape<T>& tape, const Tensor<T>& dy, TensorMap<T>& grads);

/// Zero tensors shaped like the parameters.
template <typename T>
TensorMap<T> zeros_like(const TensorMap<T>& params);

// Conversions between HxWx3 force grids and (1, 3, H, W) tensors.
template <typename T>
Tensor<T> grid_to_tensor(const ForceGrid& g);
ForceGrid tensor_to_grid(const Tensor<float>& t, int n = 0);

/// FTWB weights: "FTWB", u16 version, u32 JSON length, JSON header (config,
/// normalization, image statistics), u32 tensor count, then per tensor u16
/// name length, name, u8 rank, u32 dims, f32 data. All little-endian.
void save_weights(std::ostream& out, const UNetParams<float>& p);
void save_weights(const std::string& path, const UNetParams<float>& p);

/// Reads a weight file. With `expected`, the tensors are validated against
/// that configuration instead of the one stored in the file. Throws
/// FormatError; nothing is returned on failure.
UNetParams<float> load_weights(std::istream& in, const UNetConfig* expected = nullptr);
UNetParams<float> load_weights(const std::string& path, const UNetConfig* expected = nullptr);

}  // namespace gelforce::nn
