// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end. Also linked into the acceptance suite, which
// drives the same commands in-process.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gelforce/config.hpp"
#include "gelforce/dataset.hpp"

namespace gelforce::cli {

/// Runs `gelforce <args...>` (args[0] is the program name). Returns the
/// exit code; errors are reported as one line on `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Label grid at another resolution by summing blocks; the target must
/// divide the source.
ForceGrid to_resolution(const ForceGrid& g, const Resolution& r);

/// Loads a manifest split with labels brought to `r`.
std::vector<nn::TrainingSample> load_split(const Manifest& m, const std::string& split, const Resolution& r);

struct AblationOptions {
  std::vector<Resolution> resolutions{{12, 16}, {24, 32}, {48, 64}};
  RunConfig base;
  std::string eval_split = "test";
};

/// Trains one network per output resolution on the manifest's training
/// split (validated on "val") and reports total-force and grid-unit errors
/// on `eval_split`. The network input is taken from the images.
nlohmann::json run_ablation(const Manifest& m, const AblationOptions& opts, std::ostream* log = nullptr);

/// Inference timing: `warmup` untimed then `runs` timed forward passes.
nlohmann::json bench(const nn::UNetParams<float>& p, int runs, int warmup, std::uint64_t seed);

}  // namespace gelforce::cli
