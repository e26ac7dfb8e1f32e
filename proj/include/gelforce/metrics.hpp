// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Error metrics between predicted and reference force grids (newtons).

#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "gelforce/labeling.hpp"

namespace gelforce {

/// Mean and population standard deviation over samples.
struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};
using ChannelStats = std::array<MeanStd, 3>;  // fx, fy, fz

/// Per-sample errors, one row per sample: mean |pred - label| over cells
/// (grid unit forces) or |sum pred - sum label| (total force).
Eigen::ArrayX3d per_sample_guf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels);
Eigen::ArrayX3d per_sample_tf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels);

ChannelStats mean_std(const Eigen::ArrayX3d& per_sample);

/// Throw ValidationError for empty inputs, differing counts or grid shapes.
ChannelStats mae_guf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels);
ChannelStats mae_tf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels);

struct EvalReport {
  ChannelStats guf;
  ChannelStats tf;
  int samples = 0;
  std::string config_digest;
};

EvalReport evaluate(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels,
                    const std::string& config_digest = "");

/// {"fx": {"mae_guf", "mae_guf_std", "mae_tf", "mae_tf_std"}, ..., "samples", "config_digest"}.
nlohmann::json to_json(const EvalReport& r);

}  // namespace gelforce
