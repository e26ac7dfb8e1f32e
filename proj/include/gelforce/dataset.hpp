// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Sample manifests (JSON lines) and the synthetic dataset generator.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "gelforce/fea.hpp"
#include "gelforce/image.hpp"
#include "gelforce/indenter.hpp"
#include "gelforce/labeling.hpp"
#include "gelforce/mesh.hpp"
#include "gelforce/nn/train.hpp"

namespace gelforce {

/// Force (N) and torque (N mm) as an F/T sensor on the indenter would read.
struct FtReading {
  Vec3 force = Vec3::Zero();
  Vec3 torque = Vec3::Zero();
};

/// One manifest line. Paths are relative to the manifest's directory unless
/// absolute.
struct SampleRecord {
  std::string id;
  std::string image;
  std::string label;
  std::string split = "train";  // train, val or test
  std::string indenter;         // shape tag, e.g. "sphere_r7.5"
  IndenterScene scene;
  std::optional<FtReading> ft;
  /// Force on the indenter from the FEA; grid sum plus the dropped part.
  std::optional<Vec3> total_force;
};

void to_json(nlohmann::json& j, const SampleRecord& r);
void from_json(const nlohmann::json& j, SampleRecord& r);

struct Manifest {
  std::filesystem::path root;  // directory relative paths resolve against
  std::vector<SampleRecord> records;

  std::filesystem::path resolve(const std::string& p) const;
  /// Records of one split, in file order.
  std::vector<SampleRecord> split(const std::string& name) const;
};

/// Reads and validates a manifest. Throws FormatError for a missing file or
/// a referenced file that does not exist (naming the path), ParseError with
/// the line for malformed lines, and ValidationError for negative depths,
/// unknown splits or duplicate ids. In strict mode every label is loaded and
/// its grid sum is checked against the recorded total force.
Manifest load_manifest(const std::filesystem::path& path, bool strict = false);

void write_manifest(const std::filesystem::path& path, const std::vector<SampleRecord>& records);

/// Loads image and label of each record.
std::vector<nn::TrainingSample> load_samples(const Manifest& m, const std::vector<SampleRecord>& records);

// ---------------------------------------------------------------------------
// Synthetic data.

/// Built-in indenter families. `variant` picks a training geometry
/// (0, 1, 2, ...) or, when negative, the held-out geometry of the family.
enum class ShapeFamily { kSphere, kCuboid, kCylinder, kCone, kSlopingCuboid };

struct ShapeChoice {
  ShapeFamily family = ShapeFamily::kSphere;
  int variant = 0;
};

/// Indenter, its local rotation and its shape tag.
struct BuiltinShape {
  Indenter indenter;
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  std::string tag;
};
BuiltinShape builtin_shape(const ShapeChoice& c);
int training_variants(ShapeFamily f);
std::string to_string(ShapeFamily f);

struct SceneRanges {
  double depth_min = 0.3;   // mm
  double depth_max = 1.5;
  double position_x = 6.0;  // |x| bound of the indenter position, mm
  double position_y = 4.0;
  double offset = 0.4;      // |offset| bound per axis, mm
  double max_normal = 40.0;  // accepted total fz in (0, max_normal] N
  double max_shear = 5.0;    // accepted |fx|, |fy| <= max_shear N
};

struct SynthOptions {
  int count = 64;
  std::uint64_t seed = 0;
  BoxSpec mesh{{32.0, 24.0, 5.0}, {16, 12, 2}, 2.0};
  Resolution resolution{24, 32};
  int image_width = 320;
  int image_height = 240;
  SceneRanges ranges;
  double val_fraction = 0.125;   // of the training-shape samples
  double test_fraction = 0.125;  // samples drawn from held-out shapes
  /// Fixed depth for every sample (mm), bypassing the range.
  std::optional<double> fixed_depth;
  int max_attempts = 25;  // scene draws per sample before giving up
  int threads = 1;
  SolverOptions solver;
};

struct SynthReport {
  std::vector<SampleRecord> records;
  int rejected = 0;  // scenes outside the force band
  int failed = 0;    // FEA failures
  std::vector<std::string> log;
};

/// Projection mapping the gel top surface onto an image of the given size.
ProjectionMatrix gel_projection(const BoxSpec& box, int image_width, int image_height);

/// Renders the proxy sensor image: shaded height map of the top surface
/// plus a marker pattern that follows the in-plane displacement. With a
/// null solution the reference (undeformed) frame is rendered.
Image render_proxy_image(const Mesh& mesh, const Solution* sol, const ProjectionMatrix& p, int width, int height);

/// Generates `count` samples into `out_dir` (images/, labels/ and
/// manifest.jsonl). Deterministic for a seed, whatever the thread count.
SynthReport synth_dataset(const std::filesystem::path& out_dir, const SynthOptions& opts);

}  // namespace gelforce
