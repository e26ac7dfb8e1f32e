// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Training loop, optimizer and inference helpers.

#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "gelforce/image.hpp"
#include "gelforce/labeling.hpp"
#include "gelforce/nn/augment.hpp"
#include "gelforce/nn/unet.hpp"

namespace gelforce::nn {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 400;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double plateau_factor = 0.5;
  int plateau_patience = 10;
  double min_learning_rate = 1e-7;
  /// Metric watched by the scheduler: "val_mae" or "train_loss".
  std::string plateau_monitor = "val_mae";
  bool augment = true;
  AugmentConfig augmentation;
  std::uint64_t seed = 0;
  int threads = 1;
  /// Stop after this many optimizer steps (0: no limit).
  int max_steps = 0;
  /// Stop once an epoch's mean training loss falls below this.
  double target_loss = 0.0;

  void check() const;
};

/// Adam with bias correction.
class Adam {
 public:
  Adam(double beta1 = 0.9, double beta2 = 0.999, double epsilon = 1e-8);
  void step(TensorMap<float>& params, const TensorMap<float>& grads, double lr);
  int steps() const { return t_; }

 private:
  double beta1_, beta2_, epsilon_;
  int t_ = 0;
  TensorMap<float> m_, v_;
};

/// Multiplies the learning rate by `factor` once the monitored metric has
/// not improved (relative threshold) for `patience` consecutive epochs.
class PlateauScheduler {
 public:
  PlateauScheduler(double factor = 0.5, int patience = 10, double min_lr = 1e-7, double threshold = 1e-4);
  double step(double metric, double lr);

 private:
  double factor_, min_lr_, threshold_;
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

struct TrainingSample {
  std::string id;
  Image image;
  ForceGrid label;  // raw, in newtons
};

/// Per-channel max |f| over the training labels: shear over fx and fy,
/// normal over fz. Zero maxima fall back to 1.
NormalizationConstants compute_normalization(const std::vector<TrainingSample>& samples);
ImageStats compute_image_stats(const std::vector<TrainingSample>& samples);

/// Standardized (1, 3, H, W) network input.
Tensor<float> image_to_tensor(const Image& img, const ImageStats& stats);

/// Raw-force prediction at the configured output resolution.
ForceGrid predict(const UNetParams<float>& p, const Image& img);

/// Mean normalized loss of the parameters over a sample set (no augmentation).
double dataset_loss(const UNetParams<float>& p, const std::vector<TrainingSample>& samples);

/// Total-force MAE in newtons, averaged over the three channels.
double total_force_mae(const UNetParams<float>& p, const std::vector<TrainingSample>& samples);

struct EpochRecord {
  int epoch = 0;
  int steps = 0;
  double train_loss = 0.0;
  double val_mae = 0.0;
  double learning_rate = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  UNetParams<float> params;  // best validation checkpoint
  UNetParams<float> last;    // parameters after the final step
  std::vector<EpochRecord> history;
  int best_epoch = 0;
  double best_val_mae = 0.0;
  int steps = 0;
};

/// Trains from a seeded initialization. Normalization constants and image
/// statistics come from the training split. Throws TrainingError on a
/// non-finite loss and ValidationError for empty splits or label shapes
/// that differ from the configured output.
TrainResult train(const std::vector<TrainingSample>& train_set, const std::vector<TrainingSample>& val_set,
                  const UNetConfig& net, const TrainConfig& cfg,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

/// History as CSV: epoch,steps,train_loss,val_mae,lr,seconds.
std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace gelforce::nn
