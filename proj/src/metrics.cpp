// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/metrics.hpp"

#include <cmath>

#include "gelforce/error.hpp"

namespace gelforce {

namespace {

void check_pair(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels) {
  if (preds.empty()) throw ValidationError("metrics need at least one sample");
  if (preds.size() != labels.size()) {
    throw ValidationError("metrics: " + std::to_string(preds.size()) + " predictions for " +
                          std::to_string(labels.size()) + " labels");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].width() != labels[i].width() || preds[i].height() != labels[i].height()) {
      throw ValidationError("metrics: sample " + std::to_string(i) + " prediction is " +
                            std::to_string(preds[i].height()) + "x" + std::to_string(preds[i].width()) +
                            " but label is " + std::to_string(labels[i].height()) + "x" +
                            std::to_string(labels[i].width()));
    }
  }
}

constexpr const char* kChannels[3] = {"fx", "fy", "fz"};

}  // namespace

Eigen::ArrayX3d per_sample_guf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels) {
  check_pair(preds, labels);
  Eigen::ArrayX3d out(preds.size(), 3);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    out.row(i) = (preds[i].data() - labels[i].data()).abs().colwise().mean();
  }
  return out;
}

Eigen::ArrayX3d per_sample_tf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels) {
  check_pair(preds, labels);
  Eigen::ArrayX3d out(preds.size(), 3);
  for (std::size_t i = 0; i < preds.size(); ++i) out.row(i) = (preds[i].total() - labels[i].total()).array().abs();
  return out;
}

ChannelStats mean_std(const Eigen::ArrayX3d& e) {
  ChannelStats s;
  if (e.rows() == 0) return s;
  for (int c = 0; c < 3; ++c) {
    const double m = e.col(c).mean();
    s[c] = {m, std::sqrt((e.col(c) - m).square().mean())};
  }
  return s;
}

ChannelStats mae_guf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels) {
  return mean_std(per_sample_guf(preds, labels));
}

ChannelStats mae_tf(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels) {
  return mean_std(per_sample_tf(preds, labels));
}

EvalReport evaluate(const std::vector<ForceGrid>& preds, const std::vector<ForceGrid>& labels,
                    const std::string& config_digest) {
  return {mae_guf(preds, labels), mae_tf(preds, labels), static_cast<int>(preds.size()), config_digest};
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j;
  for (int c = 0; c < 3; ++c) {
    j[kChannels[c]] = {{"mae_guf", r.guf[c].mean},
                       {"mae_guf_std", r.guf[c].std},
                       {"mae_tf", r.tf[c].mean},
                       {"mae_tf_std", r.tf[c].std}};
  }
  j["samples"] = r.samples;
  j["config_digest"] = r.config_digest;
  return j;
}

}  // namespace gelforce
