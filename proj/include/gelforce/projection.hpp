// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

// Mapping from the FEA frame (mm) to sensor image pixels.

#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace gelforce {

enum class CameraModel { kAffine, kProjective };

/// Stored as a 3x4 matrix acting on homogeneous world points. For the affine
/// model the last row is fixed to (0, 0, 0, 1), so the top 2x4 block maps
/// [X; 1] straight to pixels.
struct ProjectionMatrix {
  CameraModel kind = CameraModel::kAffine;
  Eigen::Matrix<double, 3, 4> matrix = Eigen::Matrix<double, 3, 4>::Zero();

  Eigen::Matrix<double, 2, 4> affine_block() const { return matrix.topRows<2>(); }

  /// Rank and non-degeneracy checks; throws ValidationError.
  void check() const;
};

struct Correspondence {
  Eigen::Vector3d world;  // mm
  Eigen::Vector2d pixel;  // px
};

struct ProjectionFit {
  ProjectionMatrix projection;
  double rms = 0.0;  // reprojection residual, px
};

/// Least-squares fit. Affine needs >= 4 points that are not collinear;
/// when all world points are coplanar the out-of-plane column is the
/// minimum-norm choice (zero for the plane z = const through the origin).
/// Projective needs >= 6 points not all coplanar and uses the normalized
/// DLT with a unit-norm constraint. Throws ValidationError for too few
/// points or rank-deficient configurations.
ProjectionFit fit_projection(const std::vector<Correspondence>& corr, CameraModel kind = CameraModel::kAffine);

/// Pixel position of a world point. Throws ValidationError when a projective
/// map sends the point to infinity.
Eigen::Vector2d project(const ProjectionMatrix& p, const Eigen::Vector3d& x);

/// Root-mean-square pixel distance over the correspondences.
double reprojection_rms(const ProjectionMatrix& p, const std::vector<Correspondence>& corr);

/// Affine map with `px_per_mm` scale and the world origin at `origin_px`:
/// u = s x + u0, v = s y + v0.
ProjectionMatrix scaled_projection(double px_per_mm, const Eigen::Vector2d& origin_px);

/// Pairs the default gel slab with a 320 x 240 image (10 px/mm, centered).
ProjectionMatrix default_projection();

std::string to_string(CameraModel kind);
CameraModel camera_model_from_string(const std::string& s);

void to_json(nlohmann::json& j, const ProjectionMatrix& p);
void from_json(const nlohmann::json& j, ProjectionMatrix& p);
void to_json(nlohmann::json& j, const Correspondence& c);
void from_json(const nlohmann::json& j, Correspondence& c);

}  // namespace gelforce
