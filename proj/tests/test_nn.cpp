// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "gelforce/error.hpp"
#include "gelforce/image.hpp"
#include "gelforce/nn/augment.hpp"
#include "gelforce/nn/layers.hpp"
#include "gelforce/nn/train.hpp"
#include "gelforce/nn/unet.hpp"

using namespace gelforce;
using namespace gelforce::nn;

namespace {

Tensor<double> random_tensor(const Tensor<double>::Shape& s, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  Tensor<double> t(s);
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// Values bounded away from zero so relu kinks stay outside the FD stencil.
Tensor<double> kink_free_tensor(const Tensor<double>::Shape& s, std::mt19937_64& rng) {
  Tensor<double> t = random_tensor(s, rng, 0.1, 1.0);
  std::bernoulli_distribution sign(0.5);
  for (auto& v : t.values()) v = sign(rng) ? v : -v;
  return t;
}

double relative_error(double a, double n, double floor) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), floor});
}

// Max relative error between an analytic gradient and central differences
// of `f` with respect to every entry of `x`. Entries below `floor` are
// compared in absolute terms.
double fd_error(Tensor<double>& x, const Tensor<double>& analytic, const std::function<double()>& f,
                double h = 1e-6, double floor = 1e-8) {
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    auto at = [&](double d) {
      x.data()[i] = keep + d;
      return f();
    };
    const double fd = (at(h) - at(-h)) / (2.0 * h);
    x.data()[i] = keep;
    worst = std::max(worst, relative_error(analytic.data()[i], fd, floor));
  }
  return worst;
}

double weighted_sum(const Tensor<double>& y, const Tensor<double>& w) { return (y.flat() * w.flat()).sum(); }

UNetConfig tiny_config() {
  UNetConfig c;
  c.input_height = 16;
  c.input_width = 16;
  c.width = 4;
  c.output = {4, 4};
  return c;
}

Image pattern_image(int w, int h, int seed) {
  Image img(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (auto& v : img.rgb) v = u(rng);
  return img;
}

}  // namespace

TEST_CASE("conv2d finite-difference gradients") {
  std::mt19937_64 rng(1);
  struct Case {
    int k;
    Padding pad;
  };
  for (const Case& c : {Case{3, same_padding(3)}, Case{1, Padding{}}, Case{2, Padding{0, 0, 1, 1}}}) {
    CAPTURE(c.k);
    Tensor<double> x = random_tensor({2, 3, 5, 6}, rng);
    Tensor<double> w = random_tensor({4, 3, c.k, c.k}, rng);
    Tensor<double> b = random_tensor({1, 4, 1, 1}, rng);
    const Tensor<double> y = conv2d(x, w, b, c.pad);
    CHECK(y.shape() == Tensor<double>::Shape{2, 4, 5, 6});
    const Tensor<double> r = random_tensor(y.shape(), rng);
    Tensor<double> dx, dw(w.shape()), db(b.shape());
    conv2d_backward(x, w, c.pad, r, &dx, dw, db);
    auto f = [&] { return weighted_sum(conv2d(x, w, b, c.pad), r); };
    CHECK(fd_error(x, dx, f) < 1e-4);
    CHECK(fd_error(w, dw, f) < 1e-4);
    CHECK(fd_error(b, db, f) < 1e-4);
  }
}

TEST_CASE("conv2d against a direct loop") {
  std::mt19937_64 rng(2);
  const Tensor<double> x = random_tensor({1, 2, 4, 5}, rng);
  const Tensor<double> w = random_tensor({3, 2, 3, 3}, rng);
  const Tensor<double> b = random_tensor({1, 3, 1, 1}, rng);
  const Tensor<double> y = conv2d(x, w, b, same_padding(3));
  double worst = 0.0;
  for (int o = 0; o < 3; ++o) {
    for (int yy = 0; yy < 4; ++yy) {
      for (int xx = 0; xx < 5; ++xx) {
        double s = b(0, o, 0, 0);
        for (int i = 0; i < 2; ++i) {
          for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
              const int sy = yy + ky - 1, sx = xx + kx - 1;
              if (sy >= 0 && sy < 4 && sx >= 0 && sx < 5) s += w(o, i, ky, kx) * x(0, i, sy, sx);
            }
          }
        }
        worst = std::max(worst, std::abs(s - y(0, o, yy, xx)));
      }
    }
  }
  CHECK(worst < 1e-14);
}

TEST_CASE("delta kernel is the identity") {
  std::mt19937_64 rng(3);
  const Tensor<double> x = random_tensor({1, 1, 7, 9}, rng);
  Tensor<double> w(1, 1, 3, 3);
  w(0, 0, 1, 1) = 1.0;
  const Tensor<double> y = conv2d(x, w, Tensor<double>(1, 1, 1, 1), same_padding(3));
  CHECK(y.values() == x.values());
}

TEST_CASE("relu, maxpool, upsample, concat and resize gradients") {
  std::mt19937_64 rng(4);
  SUBCASE("relu") {
    Tensor<double> x = kink_free_tensor({2, 3, 4, 4}, rng);
    const Tensor<double> r = random_tensor(x.shape(), rng);
    const Tensor<double> dx = relu_backward(relu(x), r);
    CHECK(fd_error(x, dx, [&] { return weighted_sum(relu(x), r); }) < 1e-4);
  }
  SUBCASE("maxpool") {
    Tensor<double> x = random_tensor({2, 2, 4, 6}, rng);
    std::vector<int> idx;
    const Tensor<double> y = maxpool2(x, &idx);
    const Tensor<double> r = random_tensor(y.shape(), rng);
    const Tensor<double> dx = maxpool2_backward(r, idx, x.shape());
    CHECK(fd_error(x, dx, [&] { return weighted_sum(maxpool2(x), r); }) < 1e-4);
  }
  SUBCASE("upsample") {
    Tensor<double> x = random_tensor({1, 2, 3, 4}, rng);
    const Tensor<double> r = random_tensor({1, 2, 6, 8}, rng);
    const Tensor<double> dx = upsample2_backward(r);
    CHECK(fd_error(x, dx, [&] { return weighted_sum(upsample2(x), r); }) < 1e-4);
  }
  SUBCASE("concat") {
    Tensor<double> a = random_tensor({2, 2, 3, 3}, rng);
    Tensor<double> b = random_tensor({2, 3, 3, 3}, rng);
    const Tensor<double> r = random_tensor({2, 5, 3, 3}, rng);
    Tensor<double> da, db;
    concat_backward(r, 2, da, db);
    auto f = [&] { return weighted_sum(concat(a, b), r); };
    CHECK(fd_error(a, da, f) < 1e-4);
    CHECK(fd_error(b, db, f) < 1e-4);
  }
  SUBCASE("area resize") {
    Tensor<double> x = random_tensor({1, 3, 10, 15}, rng);
    const Tensor<double> r = random_tensor({1, 3, 4, 6}, rng);
    const Tensor<double> dx = area_resize_backward(r, 10, 15);
    CHECK(fd_error(x, dx, [&] { return weighted_sum(area_resize(x, 4, 6), r); }) < 1e-4);
  }
}

TEST_CASE("maxpool routes the gradient to the maximum") {
  Tensor<double> x(1, 1, 2, 2);
  x.values() = {1.0, 2.0, 3.0, 4.0};
  std::vector<int> idx;
  const Tensor<double> y = maxpool2(x, &idx);
  CHECK(y.values() == std::vector<double>{4.0});
  const Tensor<double> dx = maxpool2_backward(Tensor<double>(1, 1, 1, 1, 1.0), idx, x.shape());
  CHECK(dx.values() == std::vector<double>{0.0, 0.0, 0.0, 1.0});
}

TEST_CASE("area resize preserves block sums") {
  std::mt19937_64 rng(5);
  const Tensor<double> x = random_tensor({1, 3, 240, 320}, rng);
  const Tensor<double> y = area_resize(x, 24, 32);
  for (int c = 0; c < 3; ++c) {
    double sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < x.plane(); ++i) sx += x.data()[c * x.plane() + i];
    for (std::size_t i = 0; i < y.plane(); ++i) sy += y.data()[c * y.plane() + i];
    CHECK(sy == doctest::Approx(sx).epsilon(1e-12));
  }
  // Integer factors sum whole blocks.
  double block = 0.0;
  for (int yy = 0; yy < 10; ++yy) {
    for (int xx = 0; xx < 10; ++xx) block += x(0, 1, 10 + yy, 20 + xx);
  }
  CHECK(y(0, 1, 1, 2) == doctest::Approx(block).epsilon(1e-12));
  // Non-integer factors still conserve.
  const Tensor<double> z = area_resize(x, 7, 9);
  CHECK(z.flat().sum() == doctest::Approx(x.flat().sum()).epsilon(1e-12));
  CHECK_THROWS_AS(area_resize(x, 300, 10), ShapeError);
}

TEST_CASE("mse loss") {
  std::mt19937_64 rng(6);
  Tensor<double> label = random_tensor({1, 3, 4, 5}, rng);
  CHECK(mse_loss(label, label) == 0.0);
  Tensor<double> pred = label;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 5; ++c) pred(0, 0, r, c) += 1.0;
  }
  CHECK(mse_loss(pred, label) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
  Tensor<double> p2 = random_tensor(label.shape(), rng);
  Tensor<double> g;
  mse_loss(p2, label, &g);
  CHECK(fd_error(p2, g, [&] { return mse_loss(p2, label); }) < 1e-6);
  // Channel permutation applied to both sides.
  auto permute = [](const Tensor<double>& t) {
    Tensor<double> o(t.shape());
    for (int c = 0; c < 3; ++c) {
      for (int r = 0; r < t.h(); ++r) {
        for (int k = 0; k < t.w(); ++k) o(0, (c + 1) % 3, r, k) = t(0, c, r, k);
      }
    }
    return o;
  };
  CHECK(mse_loss(permute(p2), permute(label)) == doctest::Approx(mse_loss(p2, label)).epsilon(1e-14));
  CHECK_THROWS_AS(mse_loss(p2, Tensor<double>(1, 3, 4, 4)), ShapeError);
}

TEST_CASE("shape errors name both shapes") {
  const Tensor<double> x(1, 3, 4, 4), w(2, 5, 3, 3), b(1, 2, 1, 1);
  try {
    conv2d(x, w, b, same_padding(3));
    FAIL("expected a shape error");
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("(1,3,4,4)") != std::string::npos);
    CHECK(msg.find("(2,5,3,3)") != std::string::npos);
  }
  CHECK_THROWS_AS(concat(Tensor<double>(1, 1, 2, 2), Tensor<double>(1, 1, 2, 3)), ShapeError);
  CHECK_THROWS_AS(maxpool2(Tensor<double>(1, 1, 3, 2)), ShapeError);
}

TEST_CASE("end-to-end U-net gradient") {
  const UNetConfig cfg = tiny_config();
  std::mt19937_64 rng(7);
  UNetParams<double> p = init_unet<double>(cfg, 11);
  // Non-zero biases exercise the bias paths.
  for (auto& [name, t] : p.tensors) {
    if (name.ends_with(".bias")) t = random_tensor(t.shape(), rng, -0.1, 0.1);
  }
  const Tensor<double> x = random_tensor({1, 3, 16, 16}, rng);
  const Tensor<double> label = random_tensor({1, 3, 4, 4}, rng);
  UNetTape<double> tape;
  const Tensor<double> y = unet_forward(p, x, &tape);
  CHECK(y.shape() == Tensor<double>::Shape{1, 3, 4, 4});
  Tensor<double> dy;
  const double l0 = mse_loss(y, label, &dy);
  TensorMap<double> g;
  unet_backward(p, tape, dy, g);
  REQUIRE(g.size() == p.tensors.size());

  auto loss = [&] { return mse_loss(unet_forward(p, x), label); };
  double worst = 0.0;
  std::string worst_name;
  for (auto& [name, t] : p.tensors) {
    // Round-off of the differences scales with the loss value; entries
    // below 1e-5 of it are compared in absolute terms.
    const double e = fd_error(t, g.at(name), loss, 2e-5, 1e-5 * std::max(l0, 1.0));
    if (e > worst) {
      worst = e;
      worst_name = name;
    }
  }
  CAPTURE(worst_name);
  CHECK(worst < 1e-5);

  // Single-precision gradients against the double-precision differences.
  const UNetParams<float> pf = p.cast<float>();
  UNetTape<float> tf;
  const Tensor<float> yf = unet_forward(pf, x.cast<float>(), &tf);
  Tensor<float> dyf;
  mse_loss(yf, label.cast<float>(), &dyf);
  TensorMap<float> gf;
  unet_backward(pf, tf, dyf, gf);
  double worst_f = 0.0;
  for (const auto& [name, t] : g) {
    // Floor at 1% of the tensor's RMS gradient: f32 round-off swamps tinier entries.
    const double rms = std::sqrt(t.flat().square().mean());
    const auto& a = gf.at(name);
    for (std::size_t i = 0; i < t.size(); ++i) {
      worst_f = std::max(worst_f, relative_error(a.data()[i], t.data()[i], std::max(1e-2 * rms, 1e-8)));
    }
  }
  CHECK(worst_f < 1e-3);
}

TEST_CASE("forward contracts") {
  UNetConfig cfg;  // default 240x320 -> 24x32
  const UNetParams<float> p = init_unet<float>(cfg, 3);
  const Image img = pattern_image(320, 240, 1);
  const Tensor<float> x = image_to_tensor(img, ImageStats{});
  const Tensor<float> y = unet_forward(p, x);
  CHECK(y.shape() == Tensor<float>::Shape{1, 3, 24, 32});
  // Pure: repeated calls agree bit for bit.
  CHECK(unet_forward(p, x).values() == y.values());
  // Zero weights give zero output.
  const Tensor<float> z = unet_forward(zero_unet<float>(cfg), x);
  CHECK((z.flat() == 0.0f).all());
  CHECK_THROWS_AS(unet_forward(p, Tensor<float>(1, 3, 16, 16)), ShapeError);

  UNetConfig bad = cfg;
  bad.input_height = 250;
  CHECK_THROWS_AS(bad.check(), ValidationError);
  bad = cfg;
  bad.output = {300, 32};
  CHECK_THROWS_AS(bad.check(), ValidationError);
}

TEST_CASE("weight files") {
  UNetConfig cfg = tiny_config();
  UNetParams<float> p = init_unet<float>(cfg, 5);
  p.constants = {2.5, 7.0};
  p.image_stats.mean = {0.1, 0.2, 0.3};
  p.image_stats.stddev = {0.5, 0.6, 0.7};
  std::ostringstream out;
  save_weights(out, p);
  const std::string bytes = out.str();
  CHECK(bytes.substr(0, 4) == "FTWB");

  std::istringstream in(bytes);
  const UNetParams<float> q = load_weights(in);
  CHECK(q.config == cfg);
  CHECK(q.constants == p.constants);
  CHECK(q.image_stats == p.image_stats);
  for (const auto& [name, t] : p.tensors) CHECK(q.tensors.at(name).values() == t.values());
  const Image img = pattern_image(16, 16, 2);
  CHECK(predict(q, img).data().isApprox(predict(p, img).data(), 0.0));

  for (std::size_t cut : {std::size_t{3}, std::size_t{10}, bytes.size() / 2, bytes.size() - 1}) {
    std::istringstream trunc(bytes.substr(0, cut));
    CHECK_THROWS_AS(load_weights(trunc), FormatError);
  }
  std::string bad_magic = bytes;
  bad_magic[0] = 'X';
  std::istringstream bm(bad_magic);
  CHECK_THROWS_WITH_AS(load_weights(bm), doctest::Contains("magic"), FormatError);

  // Width-16 weights under a width-32 configuration.
  UNetConfig w16 = tiny_config(), w32 = tiny_config();
  w16.width = 16;
  w32.width = 32;
  std::ostringstream o16;
  save_weights(o16, init_unet<float>(w16, 1));
  std::istringstream i16(o16.str());
  try {
    load_weights(i16, &w32);
    FAIL("expected a format error");
  } catch (const FormatError& e) {
    CHECK(std::string(e.what()).find("dec0.conv1.bias") != std::string::npos);
  }
}

TEST_CASE("augmentation") {
  const Image img = pattern_image(32, 24, 3);
  std::mt19937_64 a(9), b(9);
  const AugmentConfig cfg;
  const Image x = augment(img, cfg, a), y = augment(img, cfg, b);
  CHECK(x.rgb == y.rgb);
  CHECK(x.rgb != img.rgb);
  for (float v : x.rgb) CHECK((v >= 0.0f && v <= 1.0f));

  std::mt19937_64 c(10);
  CHECK(augment(img, AugmentConfig::none(), c).rgb == img.rgb);

  // Brightness only: each draw scales the mean by a factor in the range.
  Image mid(16, 16, 0.5f);
  AugmentConfig bright = AugmentConfig::none();
  bright.brightness = 0.2;
  std::mt19937_64 r(11);
  double lo = 2.0, hi = 0.0, mean_ratio = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Image o = augment(mid, bright, r);
    double m = 0.0;
    for (float v : o.rgb) m += v;
    const double ratio = m / o.rgb.size() / 0.5;
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
    mean_ratio += ratio / 1000.0;
  }
  CHECK(lo >= 0.8 - 1e-6);
  CHECK(hi <= 1.2 + 1e-6);
  CHECK(lo < 0.82);
  CHECK(hi > 1.18);
  CHECK(std::abs(mean_ratio - 1.0) < 0.02);

  // Noise only: deviation bounded by noise_max, mean unbiased.
  AugmentConfig noise = AugmentConfig::none();
  noise.noise_max = 0.02;
  double worst_sd = 0.0, drift = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const Image o = augment(mid, noise, r);
    double s = 0.0, s2 = 0.0;
    for (float v : o.rgb) {
      s += v - 0.5;
      s2 += (v - 0.5) * (v - 0.5);
    }
    const double n = static_cast<double>(o.rgb.size());
    worst_sd = std::max(worst_sd, std::sqrt(s2 / n));
    drift += s / n / 1000.0;
  }
  CHECK(worst_sd < 0.02 * 1.15);
  CHECK(std::abs(drift) < 1e-3);

  // Hue and saturation keep a grey image grey.
  AugmentConfig colour = AugmentConfig::none();
  colour.hue = 0.05;
  colour.saturation = 0.2;
  const Image g = augment(mid, colour, r);
  for (float v : g.rgb) CHECK(v == doctest::Approx(0.5f).epsilon(1e-5));
}

TEST_CASE("optimizer and scheduler") {
  // Adam's first step moves every coordinate by lr against the gradient sign.
  TensorMap<float> p, g;
  p.emplace("w", Tensor<float>(1, 1, 1, 3));
  g.emplace("w", Tensor<float>(1, 1, 1, 3));
  g.at("w").values() = {2.0f, -0.5f, 1e-3f};
  Adam adam;
  adam.step(p, g, 0.01);
  CHECK(p.at("w").values()[0] == doctest::Approx(-0.01f).epsilon(1e-4));
  CHECK(p.at("w").values()[1] == doctest::Approx(0.01f).epsilon(1e-4));
  CHECK(p.at("w").values()[2] == doctest::Approx(-0.01f).epsilon(1e-3));

  PlateauScheduler s(0.5, 2);
  double lr = 1.0;
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const double next = s.step(u(rng), lr);
    CHECK(next <= lr);
    lr = next;
  }
  PlateauScheduler flat(0.5, 2);
  lr = 1.0;
  for (double m : {1.0, 1.0, 1.0}) lr = flat.step(m, lr);
  CHECK(lr == 1.0);
  lr = flat.step(1.0, lr);
  CHECK(lr == 0.5);
}

TEST_CASE("training") {
  const UNetConfig cfg = tiny_config();
  std::vector<TrainingSample> set;
  for (int i = 0; i < 4; ++i) {
    TrainingSample s;
    s.id = "s" + std::to_string(i);
    s.image = pattern_image(16, 16, 20 + i);
    s.label = ForceGrid(4, 4);
    s.label.data().col(0).setConstant(0.02);
    s.label.data().col(1).setConstant(-0.01);
    s.label.data().col(2).setConstant(0.1);
    set.push_back(s);
  }
  TrainConfig tc;
  tc.epochs = 150;
  tc.batch_size = 2;
  tc.augment = false;
  tc.seed = 3;

  SUBCASE("constant labels are learned") {
    const TrainResult r = train(set, set, cfg, tc);
    CHECK(r.history.size() == 150);
    CHECK(r.steps == 300);
    CHECK(r.best_val_mae < 0.01 * r.history.front().val_mae + 1e-6);
    const ForceGrid pred = predict(r.params, set[0].image);
    CHECK(std::abs(pred.total().z() - 1.6) < 0.02);
    const std::string csv = history_csv(r.history);
    CHECK(csv.rfind("epoch,steps,train_loss,val_mae,lr,seconds\n", 0) == 0);
  }
  SUBCASE("deterministic for a seed and any thread count") {
    tc.epochs = 3;
    tc.augment = true;
    const TrainResult a = train(set, set, cfg, tc);
    const TrainResult b = train(set, set, cfg, tc);
    tc.threads = 2;
    const TrainResult c = train(set, set, cfg, tc);
    for (const auto& [name, t] : a.last.tensors) {
      CHECK(b.last.tensors.at(name).values() == t.values());
      CHECK(c.last.tensors.at(name).values() == t.values());
    }
  }
  SUBCASE("errors") {
    auto bad = set;
    bad[1].label.data()(0, 0) = std::nan("");
    tc.epochs = 1;
    CHECK_THROWS_WITH_AS(train(bad, set, cfg, tc), doctest::Contains("lr"), TrainingError);
    CHECK_THROWS_AS(train({}, set, cfg, tc), ValidationError);
    auto wrong = set;
    wrong[0].label = ForceGrid(5, 4);
    CHECK_THROWS_AS(train(wrong, set, cfg, tc), ValidationError);
  }
}

TEST_CASE("image files") {
  const auto dir = std::filesystem::temp_directory_path() / "gelforce_test_nn";
  std::filesystem::create_directories(dir);
  Image img(5, 3);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = static_cast<float>(i * 17 % 256) / 255.0f;
  for (const char* ext : {".png", ".ppm"}) {
    const std::string path = (dir / (std::string("img") + ext)).string();
    write_image(path, img);
    const Image back = read_image(path);
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.rgb == img.rgb);
  }
  CHECK_THROWS_AS(read_image((dir / "missing.png").string()), FormatError);
  CHECK_THROWS_AS(write_image((dir / "x.bmp").string(), img), FormatError);
  {
    std::ofstream f(dir / "bad.ppm", std::ios::binary);
    f << "P6\n5 3\n255\nabc";
  }
  CHECK_THROWS_AS(read_ppm((dir / "bad.ppm").string()), FormatError);
  std::filesystem::remove_all(dir);
}
