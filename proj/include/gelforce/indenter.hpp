// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

namespace gelforce {

/// Rigid indenter in its local frame.
///
/// sphere:   centered at the origin.
/// cuboid:   |x| <= hx, |y| <= hy, |z| <= hz.
/// cylinder: axis along z, |z| <= height/2, flat ends.
/// cone:     apex at the origin opening toward +z, 0 <= z <= height.
/// mesh:     closed triangulated surface.
class Indenter {
 public:
  enum class Kind { kSphere, kCuboid, kCylinder, kCone, kMesh };

  static Indenter sphere(double radius);
  static Indenter cuboid(const Eigen::Vector3d& size);
  static Indenter cylinder(double radius, double height);
  static Indenter cone(double half_angle_rad, double height);
  static Indenter triangulated(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> triangles);

  Kind kind() const { return kind_; }
  double radius() const { return radius_; }
  const Eigen::Vector3d& half_extents() const { return half_; }
  double height() const { return height_; }
  double half_angle() const { return half_angle_; }

  /// Parameter t >= 0 where the ray o + t d first enters the solid, if any.
  std::optional<double> ray_entry(const Eigen::Vector3d& o, const Eigen::Vector3d& d) const;

  /// Point of the solid farthest along `dir`.
  Eigen::Vector3d support(const Eigen::Vector3d& dir) const;

  bool inside(const Eigen::Vector3d& p) const;

  /// Short human-readable tag such as "sphere_r7.5".
  std::string describe() const;

 private:
  Kind kind_ = Kind::kSphere;
  double radius_ = 0.0;
  Eigen::Vector3d half_ = Eigen::Vector3d::Zero();
  double height_ = 0.0;
  double half_angle_ = 0.0;
  std::vector<Eigen::Vector3d> vertices_;
  std::vector<std::array<int, 3>> triangles_;
};

/// An indenter pressed into the gel top surface.
///
/// The indenter is rotated about its local origin, placed with the origin
/// above `position` (x, y), and lowered until its lowest point sits `depth`
/// below the undeformed top surface. Contacted nodes then follow a rigid
/// tangential `offset` (no slip).
struct IndenterScene {
  Indenter indenter = Indenter::sphere(7.5);
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector2d position = Eigen::Vector2d::Zero();
  double depth = 0.0;
  Eigen::Vector2d offset = Eigen::Vector2d::Zero();
};

/// Rotation from intrinsic x-y-z angles in degrees.
Eigen::Matrix3d rotation_from_degrees(const Eigen::Vector3d& xyz_deg);

void to_json(nlohmann::json& j, const Indenter& ind);
void from_json(const nlohmann::json& j, Indenter& ind);
void to_json(nlohmann::json& j, const IndenterScene& s);
void from_json(const nlohmann::json& j, IndenterScene& s);

}  // namespace gelforce
