// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/nn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>

#include "gelforce/error.hpp"
#include "gelforce/nn/layers.hpp"

namespace gelforce::nn {

void TrainConfig::check() const {
  if (!(learning_rate > 0.0) || !(min_learning_rate >= 0.0)) throw ValidationError("learning rates must be positive");
  if (batch_size < 1) throw ValidationError("batch size must be at least 1");
  if (epochs < 1) throw ValidationError("epochs must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0) || !(epsilon > 0.0)) {
    throw ValidationError("Adam needs beta1, beta2 in [0, 1) and epsilon > 0");
  }
  if (!(plateau_factor > 0.0 && plateau_factor <= 1.0) || plateau_patience < 0) {
    throw ValidationError("plateau factor must lie in (0, 1] with non-negative patience");
  }
  if (plateau_monitor != "val_mae" && plateau_monitor != "train_loss") {
    throw ValidationError("plateau monitor must be val_mae or train_loss, not '" + plateau_monitor + "'");
  }
  if (threads < 1) throw ValidationError("threads must be at least 1");
  if (max_steps < 0) throw ValidationError("max_steps must be non-negative");
  augmentation.check();
}

Adam::Adam(double beta1, double beta2, double epsilon) : beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

void Adam::step(TensorMap<float>& params, const TensorMap<float>& grads, double lr) {
  if (m_.empty()) {
    m_ = zeros_like(params);
    v_ = zeros_like(params);
  }
  ++t_;
  const float b1 = static_cast<float>(beta1_), b2 = static_cast<float>(beta2_);
  const float c1 = static_cast<float>(1.0 - std::pow(beta1_, t_));
  const float c2 = static_cast<float>(1.0 - std::pow(beta2_, t_));
  const float step = static_cast<float>(lr);
  const float eps = static_cast<float>(epsilon_);
  for (auto& [name, p] : params) {
    const auto g = grads.find(name);
    if (g == grads.end()) continue;
    // Plain loop: Eigen's packet and scalar paths round differently and
    // their split depends on alignment, which would break reproducibility.
    float* m = m_.at(name).data();
    float* v = v_.at(name).data();
    const float* gv = g->second.data();
    float* w = p.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = b1 * m[i] + (1.0f - b1) * gv[i];
      v[i] = b2 * v[i] + (1.0f - b2) * gv[i] * gv[i];
      w[i] -= step * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
    }
  }
}

PlateauScheduler::PlateauScheduler(double factor, int patience, double min_lr, double threshold)
    : factor_(factor), min_lr_(min_lr), threshold_(threshold), patience_(patience) {}

double PlateauScheduler::step(double metric, double lr) {
  if (metric < best_ * (1.0 - threshold_)) {
    best_ = metric;
    bad_ = 0;
    return lr;
  }
  if (++bad_ > patience_) {
    bad_ = 0;
    return std::max(std::min(lr, lr * factor_), std::min(lr, min_lr_));
  }
  return lr;
}

NormalizationConstants compute_normalization(const std::vector<TrainingSample>& samples) {
  double shear = 0.0, normal = 0.0;
  for (const auto& s : samples) {
    const auto& d = s.label.data();
    if (d.rows() == 0) continue;
    shear = std::max(shear, d.leftCols<2>().abs().maxCoeff());
    normal = std::max(normal, d.col(2).abs().maxCoeff());
  }
  return {shear > 0.0 ? shear : 1.0, normal > 0.0 ? normal : 1.0};
}

ImageStats compute_image_stats(const std::vector<TrainingSample>& samples) {
  std::array<double, 3> sum{}, sq{};
  double n = 0.0;
  for (const auto& s : samples) {
    const auto& v = s.image.rgb;
    for (std::size_t i = 0; i + 2 < v.size(); i += 3) {
      for (int k = 0; k < 3; ++k) {
        sum[k] += v[i + k];
        sq[k] += static_cast<double>(v[i + k]) * v[i + k];
      }
    }
    n += static_cast<double>(v.size() / 3);
  }
  ImageStats st;
  if (n == 0.0) return st;
  for (int k = 0; k < 3; ++k) {
    st.mean[k] = sum[k] / n;
    const double var = std::max(sq[k] / n - st.mean[k] * st.mean[k], 0.0);
    st.stddev[k] = var > 1e-12 ? std::sqrt(var) : 1.0;
  }
  return st;
}

Tensor<float> image_to_tensor(const Image& img, const ImageStats& stats) {
  Tensor<float> t(1, 3, img.height, img.width);
  for (int k = 0; k < 3; ++k) {
    const float m = static_cast<float>(stats.mean[k]), inv = static_cast<float>(1.0 / stats.stddev[k]);
    float* dst = &t(0, k, 0, 0);
    for (std::size_t i = 0; i < t.plane(); ++i) dst[i] = (img.rgb[3 * i + k] - m) * inv;
  }
  return t;
}

ForceGrid predict(const UNetParams<float>& p, const Image& img) {
  const Tensor<float> y = unet_forward(p, image_to_tensor(img, p.image_stats));
  ForceGrid g = tensor_to_grid(y);
  g.normalized = true;
  g.constants = p.constants;
  return denormalize(g, p.constants);
}

double dataset_loss(const UNetParams<float>& p, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw ValidationError("loss over an empty sample set");
  double sum = 0.0;
  for (const auto& s : samples) {
    const Tensor<float> y = unet_forward(p, image_to_tensor(s.image, p.image_stats));
    const Tensor<float> l = grid_to_tensor<float>(normalize(s.label, p.constants));
    sum += mse_loss(y, l);
  }
  return sum / static_cast<double>(samples.size());
}

double total_force_mae(const UNetParams<float>& p, const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw ValidationError("MAE over an empty sample set");
  double sum = 0.0;
  for (const auto& s : samples) sum += (predict(p, s.image).total() - s.label.total()).cwiseAbs().sum() / 3.0;
  return sum / static_cast<double>(samples.size());
}

namespace {

void check_split(const std::vector<TrainingSample>& set, const UNetConfig& net, const char* what) {
  if (set.empty()) throw ValidationError(std::string(what) + " split is empty");
  for (const auto& s : set) {
    if (s.image.width != net.input_width || s.image.height != net.input_height) {
      throw ValidationError("sample '" + s.id + "' image is " + std::to_string(s.image.height) + "x" +
                            std::to_string(s.image.width) + ", network expects " + std::to_string(net.input_height) +
                            "x" + std::to_string(net.input_width));
    }
    if (s.label.height() != net.output.height || s.label.width() != net.output.width) {
      throw ValidationError("sample '" + s.id + "' label is " + std::to_string(s.label.height()) + "x" +
                            std::to_string(s.label.width()) + ", network outputs " + to_string(net.output));
    }
  }
}

// Loss and parameter gradient of one sample, the output gradient scaled by `scale`.
double sample_gradient(const UNetParams<float>& p, const Tensor<float>& x, const Tensor<float>& label, float scale,
                       TensorMap<float>& g) {
  UNetTape<float> tape;
  const Tensor<float> y = unet_forward(p, x, &tape);
  Tensor<float> dy;
  const double loss = mse_loss(y, label, &dy);
  dy.flat() *= scale;
  unet_backward(p, tape, dy, g);
  return loss;
}

}  // namespace

TrainResult train(const std::vector<TrainingSample>& train_set, const std::vector<TrainingSample>& val_set,
                  const UNetConfig& net, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch) {
  net.check();
  cfg.check();
  check_split(train_set, net, "training");
  check_split(val_set, net, "validation");

  UNetParams<float> p = init_unet<float>(net, cfg.seed);
  p.constants = compute_normalization(train_set);
  p.image_stats = compute_image_stats(train_set);

  std::vector<Tensor<float>> labels;
  labels.reserve(train_set.size());
  for (const auto& s : train_set) labels.push_back(grid_to_tensor<float>(normalize(s.label, p.constants)));

  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam adam(cfg.beta1, cfg.beta2, cfg.epsilon);
  PlateauScheduler sched(cfg.plateau_factor, cfg.plateau_patience, cfg.min_learning_rate);
  double lr = cfg.learning_rate;

  TrainResult res;
  res.best_val_mae = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  TensorMap<float> grads = zeros_like(p.tensors);

  bool stop = false;
  for (int epoch = 1; epoch <= cfg.epochs && !stop; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < order.size() && !stop; start += cfg.batch_size, ++batches) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      const int n = static_cast<int>(end - start);
      // Inputs are prepared serially so the augmentation stream is fixed.
      std::vector<Tensor<float>> inputs(n);
      for (int k = 0; k < n; ++k) {
        const auto& s = train_set[order[start + k]];
        inputs[k] = image_to_tensor(cfg.augment ? augment(s.image, cfg.augmentation, rng) : s.image, p.image_stats);
      }
      std::vector<TensorMap<float>> per(n);
      std::vector<double> losses(n, 0.0);
      const float scale = 1.0f / static_cast<float>(n);
      auto work = [&](int k) {
        per[k] = zeros_like(p.tensors);
        losses[k] = sample_gradient(p, inputs[k], labels[order[start + k]], scale, per[k]);
      };
      const int workers = std::min(cfg.threads, n);
      if (workers <= 1) {
        for (int k = 0; k < n; ++k) work(k);
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) {
          pool.emplace_back([&, w] {
            for (int k = w; k < n; k += workers) work(k);
          });
        }
        for (auto& th : pool) th.join();
      }
      // Fixed-order reduction: identical sums for any thread count.
      for (auto& [name, g] : grads) {
        g.set_zero();
        for (int k = 0; k < n; ++k) g.flat() += per[k].at(name).flat();
      }
      const double batch_loss = std::accumulate(losses.begin(), losses.end(), 0.0) / n;
      if (!std::isfinite(batch_loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << batches << " (lr " << lr << ")";
        throw TrainingError(msg.str());
      }
      adam.step(p.tensors, grads, lr);
      loss_sum += batch_loss;
      if (cfg.max_steps > 0 && adam.steps() >= cfg.max_steps) stop = true;
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.steps = adam.steps();
    rec.train_loss = loss_sum / batches;
    rec.val_mae = total_force_mae(p, val_set);
    rec.learning_rate = lr;
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (rec.val_mae < res.best_val_mae) {
      res.best_val_mae = rec.val_mae;
      res.best_epoch = epoch;
      res.params = p;
    }
    lr = sched.step(cfg.plateau_monitor == "train_loss" ? rec.train_loss : rec.val_mae, lr);
    res.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (cfg.target_loss > 0.0 && rec.train_loss < cfg.target_loss) stop = true;
  }
  if (res.best_epoch == 0) res.params = p;
  res.last = std::move(p);
  res.steps = adam.steps();
  return res;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream out;
  out.precision(10);
  out << "epoch,steps,train_loss,val_mae,lr,seconds\n";
  for (const auto& r : history) {
    out << r.epoch << "," << r.steps << "," << r.train_loss << "," << r.val_mae << "," << r.learning_rate << ","
        << r.seconds << "\n";
  }
  return out.str();
}

}  // namespace gelforce::nn
