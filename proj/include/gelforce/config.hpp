// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Run configuration files (TOML-style key = value with [unet], [train] and
// [augment] sections) and their provenance digest.

#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "gelforce/nn/train.hpp"
#include "gelforce/nn/unet.hpp"

namespace gelforce {

struct RunConfig {
  nn::UNetConfig unet;
  nn::TrainConfig train;
};

/// Keys not present keep their defaults. Throws ParseError for syntax
/// errors and ValidationError for unknown keys or unparsable values.
RunConfig parse_run_config(std::istream& in, const std::string& source = "<config>");
RunConfig load_run_config(const std::string& path);

/// Applies one "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

nlohmann::json to_json(const RunConfig& cfg);
/// TOML text that parses back to the same configuration.
std::string to_toml(const RunConfig& cfg);

/// Lower-case hex SHA-256 of the canonical JSON of the configuration.
std::string config_digest(const RunConfig& cfg);
std::string sha256_hex(const std::string& bytes);

}  // namespace gelforce
