// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/nn/unet.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

#include "../binary_io.hpp"
#include "gelforce/error.hpp"
#include "gelforce/nn/layers.hpp"

namespace gelforce::nn {

namespace {

constexpr char kMagic[4] = {'F', 'T', 'W', 'B'};
constexpr std::uint16_t kVersion = 1;

std::string conv_name(const std::string& block, const char* conv, const char* what) {
  return block + "." + conv + "." + what;
}

std::string enc_name(int i) { return "enc" + std::to_string(i); }
std::string dec_name(int i) { return "dec" + std::to_string(i); }

int level_width(const UNetConfig& c, int level) { return c.width << level; }

template <typename T>
const Tensor<T>& param(const UNetParams<T>& p, const std::string& name) {
  const auto it = p.tensors.find(name);
  if (it == p.tensors.end()) throw FormatError("missing tensor '" + name + "'");
  return it->second;
}

template <typename T>
Tensor<T>& grad(TensorMap<T>& g, const UNetParams<T>& p, const std::string& name) {
  auto it = g.find(name);
  if (it == g.end()) it = g.emplace(name, Tensor<T>(param(p, name).shape())).first;
  return it->second;
}

// conv + relu with the named kernel.
template <typename T>
Tensor<T> conv_relu(const UNetParams<T>& p, const std::string& block, const char* conv, const Tensor<T>& x) {
  return relu(conv2d(x, param(p, conv_name(block, conv, "weight")), param(p, conv_name(block, conv, "bias")),
                     same_padding(3)));
}

template <typename T>
Tensor<T> conv_relu_backward(const UNetParams<T>& p, const std::string& block, const char* conv, const Tensor<T>& x,
                             const Tensor<T>& y, const Tensor<T>& dy, TensorMap<T>& g, bool need_dx = true) {
  const std::string wn = conv_name(block, conv, "weight"), bn = conv_name(block, conv, "bias");
  Tensor<T> dx;
  conv2d_backward(x, param(p, wn), same_padding(3), relu_backward(y, dy), need_dx ? &dx : nullptr, grad(g, p, wn),
                  grad(g, p, bn));
  return dx;
}

template <typename T>
typename UNetTape<T>::Block double_conv(const UNetParams<T>& p, const std::string& block, Tensor<T> in) {
  typename UNetTape<T>::Block b;
  b.in = std::move(in);
  b.a1 = conv_relu(p, block, "conv1", b.in);
  b.a2 = conv_relu(p, block, "conv2", b.a1);
  return b;
}

template <typename T>
Tensor<T> double_conv_backward(const UNetParams<T>& p, const std::string& block, const typename UNetTape<T>::Block& b,
                               const Tensor<T>& dy, TensorMap<T>& g, bool need_dx = true) {
  const Tensor<T> d1 = conv_relu_backward(p, block, "conv2", b.a1, b.a2, dy, g);
  return conv_relu_backward(p, block, "conv1", b.in, b.a1, d1, g, need_dx);
}

const Padding kUpPadding{0, 0, 1, 1};

}  // namespace

void UNetConfig::check() const {
  if (depth < 1 || depth > 8) throw ValidationError("U-net depth must lie in [1, 8]");
  if (width < 1) throw ValidationError("U-net base width must be positive");
  if (input_channels != 3) throw ValidationError("U-net input must have 3 channels");
  const int f = 1 << depth;
  if (input_height < f || input_width < f || input_height % f != 0 || input_width % f != 0) {
    throw ValidationError("U-net input " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                          " is not divisible by 2^" + std::to_string(depth));
  }
  if (output.height < 1 || output.width < 1 || output.height > input_height || output.width > input_width) {
    throw ValidationError("U-net output " + to_string(output) + " must be within the input size");
  }
  if (upsample != "nearest") throw ValidationError("unsupported upsample mode '" + upsample + "'");
}

void to_json(nlohmann::json& j, const UNetConfig& c) {
  j = {{"input_height", c.input_height}, {"input_width", c.input_width}, {"input_channels", c.input_channels},
       {"depth", c.depth},           {"width", c.width},             {"output", to_string(c.output)},
       {"upsample", c.upsample}};
}

void from_json(const nlohmann::json& j, UNetConfig& c) {
  c = UNetConfig{};
  c.input_height = j.value("input_height", c.input_height);
  c.input_width = j.value("input_width", c.input_width);
  c.input_channels = j.value("input_channels", c.input_channels);
  c.depth = j.value("depth", c.depth);
  c.width = j.value("width", c.width);
  if (j.contains("output")) c.output = parse_resolution(j.at("output").get<std::string>());
  c.upsample = j.value("upsample", c.upsample);
}

std::map<std::string, Tensor<float>::Shape> parameter_shapes(const UNetConfig& c) {
  c.check();
  std::map<std::string, Tensor<float>::Shape> s;
  auto conv = [&](const std::string& block, const char* name, int in, int out, int k) {
    s[conv_name(block, name, "weight")] = {out, in, k, k};
    s[conv_name(block, name, "bias")] = {1, out, 1, 1};
  };
  for (int i = 0; i < c.depth; ++i) {
    const int in = i == 0 ? c.input_channels : level_width(c, i - 1);
    conv(enc_name(i), "conv1", in, level_width(c, i), 3);
    conv(enc_name(i), "conv2", level_width(c, i), level_width(c, i), 3);
  }
  conv("mid", "conv1", level_width(c, c.depth - 1), level_width(c, c.depth), 3);
  conv("mid", "conv2", level_width(c, c.depth), level_width(c, c.depth), 3);
  for (int i = c.depth - 1; i >= 0; --i) {
    const int w = level_width(c, i);
    conv(dec_name(i), "up", 2 * w, w, 2);
    conv(dec_name(i), "conv1", 2 * w, w, 3);
    conv(dec_name(i), "conv2", w, w, 3);
  }
  conv("head", "conv", c.width, 3, 1);
  return s;
}

template <typename T>
void UNetParams<T>::check() const {
  const auto expected = parameter_shapes(config);
  for (const auto& [name, shape] : expected) {
    const auto it = tensors.find(name);
    if (it == tensors.end()) throw FormatError("missing tensor '" + name + "'");
    if (it->second.shape() != shape) {
      throw FormatError("shape mismatch for tensor '" + name + "': expected " + Tensor<T>::shape_string(shape) +
                        ", found " + it->second.shape_string());
    }
  }
  for (const auto& [name, t] : tensors) {
    if (!expected.count(name)) throw FormatError("unexpected tensor '" + name + "'");
    if (!t.flat().allFinite()) throw ValidationError("tensor '" + name + "' has non-finite values");
  }
  constants.check();
  for (int k = 0; k < 3; ++k) {
    if (!std::isfinite(image_stats.mean[k]) || !(image_stats.stddev[k] > 0.0)) {
      throw ValidationError("image statistics must be finite with positive deviations");
    }
  }
}

template <typename T>
std::size_t UNetParams<T>::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : tensors) n += t.size();
  return n;
}

template <typename T>
UNetParams<T> init_unet(const UNetConfig& c, std::uint64_t seed) {
  UNetParams<T> p;
  p.config = c;
  std::mt19937_64 rng(seed);
  for (const auto& [name, shape] : parameter_shapes(c)) {
    Tensor<T> t(shape);
    if (name.ends_with(".weight")) {
      double bound = std::sqrt(6.0 / (shape[1] * shape[2] * shape[3]));
      // Output cells sum blocks of head pixels; keep their initial scale O(1).
      if (name == "head.conv.weight") {
        bound *= static_cast<double>(c.output.height) * c.output.width / (static_cast<double>(c.input_height) * c.input_width);
      }
      std::uniform_real_distribution<double> u(-bound, bound);
      for (auto& v : t.values()) v = static_cast<T>(u(rng));
    }
    p.tensors.emplace(name, std::move(t));
  }
  return p;
}

template <typename T>
UNetParams<T> zero_unet(const UNetConfig& c) {
  UNetParams<T> p;
  p.config = c;
  for (const auto& [name, shape] : parameter_shapes(c)) p.tensors.emplace(name, Tensor<T>(shape));
  return p;
}

template <typename T>
Tensor<T> unet_forward(const UNetParams<T>& p, const Tensor<T>& x, UNetTape<T>* tape) {
  const UNetConfig& c = p.config;
  if (x.c() != c.input_channels || x.h() != c.input_height || x.w() != c.input_width) {
    throw ShapeError("U-net input " + x.shape_string() + " does not match the configured " +
                     std::to_string(c.input_channels) + "x" + std::to_string(c.input_height) + "x" +
                     std::to_string(c.input_width));
  }
  UNetTape<T> local;
  UNetTape<T>& t = tape ? *tape : local;
  t = UNetTape<T>{};
  const bool keep = tape != nullptr;

  Tensor<T> a = x;
  std::vector<Tensor<T>> skips(c.depth);
  t.pool_index.resize(c.depth);
  for (int i = 0; i < c.depth; ++i) {
    auto b = double_conv(p, enc_name(i), std::move(a));
    a = maxpool2(b.a2, &t.pool_index[i]);
    skips[i] = b.a2;
    if (keep) t.enc.push_back(std::move(b));
  }
  t.mid = double_conv(p, "mid", std::move(a));
  a = t.mid.a2;
  if (!keep) t.mid = {};
  for (int i = c.depth - 1; i >= 0; --i) {
    const std::string name = dec_name(i);
    Tensor<T> u = upsample2(a);
    const Tensor<T> v = conv2d(u, param(p, conv_name(name, "up", "weight")), param(p, conv_name(name, "up", "bias")),
                               kUpPadding);
    t.skip_channels.push_back(skips[i].c());
    auto b = double_conv(p, name, concat(skips[i], v));
    skips[i] = {};
    a = b.a2;
    if (keep) {
      t.dec_up_in.push_back(std::move(u));
      t.dec.push_back(std::move(b));
    }
  }
  Tensor<T> full = conv2d(a, param(p, "head.conv.weight"), param(p, "head.conv.bias"), Padding{});
  Tensor<T> y = area_resize(full, c.output.height, c.output.width);
  if (keep) {
    t.head_in = std::move(a);
    t.full = std::move(full);
  }
  return y;
}

template <typename T>
void unet_backward(const UNetParams<T>& p, const UNetTape<T>& t, const Tensor<T>& dy, TensorMap<T>& g) {
  const UNetConfig& c = p.config;
  if (static_cast<int>(t.enc.size()) != c.depth || static_cast<int>(t.dec.size()) != c.depth) {
    throw ShapeError("U-net backward needs a tape recorded by the forward pass");
  }
  const Tensor<T> dfull = area_resize_backward(dy, t.full.h(), t.full.w());
  Tensor<T> da;
  conv2d_backward(t.head_in, param(p, "head.conv.weight"), Padding{}, dfull, &da, grad(g, p, "head.conv.weight"),
                  grad(g, p, "head.conv.bias"));
  std::vector<Tensor<T>> dskip(c.depth);
  // Decoder blocks were recorded from the deepest level up; undo from level 0.
  for (int k = c.depth - 1; k >= 0; --k) {
    const int i = c.depth - 1 - k;
    const std::string name = dec_name(i);
    const auto& b = t.dec[k];
    const Tensor<T> dcat = double_conv_backward(p, name, b, da, g);
    Tensor<T> dv;
    concat_backward(dcat, t.skip_channels[k], dskip[i], dv);
    Tensor<T> du;
    conv2d_backward(t.dec_up_in[k], param(p, conv_name(name, "up", "weight")), kUpPadding, dv, &du,
                    grad(g, p, conv_name(name, "up", "weight")), grad(g, p, conv_name(name, "up", "bias")));
    da = upsample2_backward(du);
  }
  da = double_conv_backward(p, "mid", t.mid, da, g);
  for (int i = c.depth - 1; i >= 0; --i) {
    const auto& b = t.enc[i];
    Tensor<T> d2 = maxpool2_backward(da, t.pool_index[i], b.a2.shape());
    d2.flat() += dskip[i].flat();
    da = double_conv_backward(p, enc_name(i), b, d2, g, i > 0);
  }
}

template <typename T>
TensorMap<T> zeros_like(const TensorMap<T>& params) {
  TensorMap<T> out;
  for (const auto& [name, t] : params) out.emplace(name, Tensor<T>(t.shape()));
  return out;
}

template <typename T>
Tensor<T> grid_to_tensor(const ForceGrid& g) {
  Tensor<T> t(1, 3, g.height(), g.width());
  for (int r = 0; r < g.height(); ++r) {
    for (int col = 0; col < g.width(); ++col) {
      for (int ch = 0; ch < 3; ++ch) t(0, ch, r, col) = static_cast<T>(g(r, col, ch));
    }
  }
  return t;
}

ForceGrid tensor_to_grid(const Tensor<float>& t, int n) {
  if (t.c() != 3 || n < 0 || n >= t.n()) throw ShapeError("tensor " + t.shape_string() + " is not a force grid batch");
  ForceGrid g(t.w(), t.h());
  for (int r = 0; r < t.h(); ++r) {
    for (int col = 0; col < t.w(); ++col) {
      for (int ch = 0; ch < 3; ++ch) g(r, col, ch) = t(n, ch, r, col);
    }
  }
  return g;
}

void save_weights(std::ostream& out, const UNetParams<float>& p) {
  p.check();
  nlohmann::json header = {{"config", p.config},
                           {"normalization", {{"shear", p.constants.shear}, {"normal", p.constants.normal}}},
                           {"image_stats", {{"mean", p.image_stats.mean}, {"std", p.image_stats.stddev}}},
                           {"dtype", "f32"}};
  const std::string js = header.dump();
  out.write(kMagic, 4);
  binio::put_le<std::uint16_t>(out, kVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(js.size()));
  out.write(js.data(), static_cast<std::streamsize>(js.size()));
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(p.tensors.size()));
  for (const auto& [name, t] : p.tensors) {
    binio::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    binio::put_le<std::uint8_t>(out, 4);
    for (int d : t.shape()) binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (float v : t.values()) binio::put_le<float>(out, v);
  }
  if (!out) throw FormatError("failed writing FTWB data");
}

void save_weights(const std::string& path, const UNetParams<float>& p) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open '" + path + "' for writing");
  save_weights(f, p);
}

UNetParams<float> load_weights(std::istream& in, const UNetConfig* expected) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("FTWB truncated in magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not an FTWB file (bad magic)");
  const auto version = binio::get_le<std::uint16_t>(in, "FTWB", "version");
  if (version != kVersion) throw FormatError("unsupported FTWB version " + std::to_string(version));
  const auto jlen = binio::get_le<std::uint32_t>(in, "FTWB", "header");
  std::string js(jlen, '\0');
  if (!in.read(js.data(), jlen)) throw FormatError("FTWB truncated in header");
  UNetParams<float> p;
  try {
    const auto header = nlohmann::json::parse(js);
    p.config = header.at("config").get<UNetConfig>();
    p.constants.shear = header.at("normalization").at("shear").get<double>();
    p.constants.normal = header.at("normalization").at("normal").get<double>();
    p.image_stats.mean = header.at("image_stats").at("mean").get<std::array<double, 3>>();
    p.image_stats.stddev = header.at("image_stats").at("std").get<std::array<double, 3>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("bad FTWB header: ") + e.what());
  }
  if (expected) p.config = *expected;
  const auto count = binio::get_le<std::uint32_t>(in, "FTWB", "tensor count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto nlen = binio::get_le<std::uint16_t>(in, "FTWB", "tensor name");
    std::string name(nlen, '\0');
    if (!in.read(name.data(), nlen)) throw FormatError("FTWB truncated in tensor name");
    const auto rank = binio::get_le<std::uint8_t>(in, "FTWB", "tensor rank");
    if (rank != 4) throw FormatError("tensor '" + name + "' has rank " + std::to_string(rank) + ", expected 4");
    Tensor<float>::Shape shape{};
    for (int& d : shape) {
      const auto v = binio::get_le<std::uint32_t>(in, "FTWB", "tensor shape");
      if (v > (1u << 24)) throw FormatError("tensor '" + name + "' has an implausible dimension");
      d = static_cast<int>(v);
    }
    Tensor<float> t(shape);
    if (!in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(float)))) {
      throw FormatError("FTWB truncated in tensor '" + name + "'");
    }
    if constexpr (std::endian::native == std::endian::big) {
      for (auto& v : t.values()) {
        auto* b = reinterpret_cast<unsigned char*>(&v);
        std::reverse(b, b + sizeof(float));
      }
    }
    if (!p.tensors.emplace(name, std::move(t)).second) throw FormatError("duplicate tensor '" + name + "'");
  }
  p.check();
  return p;
}

UNetParams<float> load_weights(const std::string& path, const UNetConfig* expected) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw FormatError("cannot open weight file '" + path + "'");
  return load_weights(f, expected);
}

#define GELFORCE_INSTANTIATE(T)                                                                              \
  template struct UNetParams<T>;                                                                             \
  template UNetParams<T> init_unet<T>(const UNetConfig&, std::uint64_t);                                     \
  template UNetParams<T> zero_unet<T>(const UNetConfig&);                                                    \
  template Tensor<T> unet_forward<T>(const UNetParams<T>&, const Tensor<T>&, UNetTape<T>*);                  \
  template void unet_backward<T>(const UNetParams<T>&, const UNetTape<T>&, const Tensor<T>&, TensorMap<T>&); \
  template TensorMap<T> zeros_like<T>(const TensorMap<T>&);                                                  \
  template Tensor<T> grid_to_tensor<T>(const ForceGrid&);

GELFORCE_INSTANTIATE(float)
GELFORCE_INSTANTIATE(double)

#undef GELFORCE_INSTANTIATE

}  // namespace gelforce::nn
