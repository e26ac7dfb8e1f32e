// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/indenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include <Eigen/Geometry>

#include "gelforce/error.hpp"

namespace gelforce {

namespace {

// Real roots of a t^2 + b t + c = 0, appended to `out`.
void quadratic_roots(double a, double b, double c, std::vector<double>& out) {
  constexpr double kTiny = 1e-300;
  if (std::abs(a) < kTiny) {
    if (std::abs(b) > kTiny) out.push_back(-c / b);
    return;
  }
  const double disc = b * b - 4.0 * a * c;
  if (disc < 0.0) return;
  const double q = -0.5 * (b + std::copysign(std::sqrt(disc), b));
  out.push_back(q / a);
  if (std::abs(q) > kTiny) out.push_back(c / q);
}

void plane_crossing(double o, double d, double level, std::vector<double>& out) {
  if (d != 0.0) out.push_back((level - o) / d);
}

Eigen::Vector2d unit_xy(const Eigen::Vector3d& d) {
  const Eigen::Vector2d v(d.x(), d.y());
  const double n = v.norm();
  return n > 0.0 ? Eigen::Vector2d(v / n) : Eigen::Vector2d::Zero();
}

}  // namespace

Indenter Indenter::sphere(double radius) {
  if (!(radius > 0.0)) throw ValidationError("sphere radius must be positive");
  Indenter s;
  s.kind_ = Kind::kSphere;
  s.radius_ = radius;
  return s;
}

Indenter Indenter::cuboid(const Eigen::Vector3d& size) {
  if (!(size.minCoeff() > 0.0)) throw ValidationError("cuboid size must be positive");
  Indenter s;
  s.kind_ = Kind::kCuboid;
  s.half_ = 0.5 * size;
  return s;
}

Indenter Indenter::cylinder(double radius, double height) {
  if (!(radius > 0.0) || !(height > 0.0)) throw ValidationError("cylinder radius and height must be positive");
  Indenter s;
  s.kind_ = Kind::kCylinder;
  s.radius_ = radius;
  s.height_ = height;
  return s;
}

Indenter Indenter::cone(double half_angle_rad, double height) {
  if (!(half_angle_rad > 0.0) || !(half_angle_rad < 0.5 * std::numbers::pi) || !(height > 0.0)) {
    throw ValidationError("cone needs 0 < half angle < 90 degrees and a positive height");
  }
  Indenter s;
  s.kind_ = Kind::kCone;
  s.half_angle_ = half_angle_rad;
  s.height_ = height;
  return s;
}

Indenter Indenter::triangulated(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> triangles) {
  if (vertices.size() < 4 || triangles.size() < 4) throw ValidationError("indenter mesh needs a closed surface");
  for (const auto& t : triangles) {
    for (int v : t) {
      if (v < 0 || v >= static_cast<int>(vertices.size())) throw ValidationError("indenter triangle index out of range");
    }
  }
  Indenter s;
  s.kind_ = Kind::kMesh;
  s.vertices_ = std::move(vertices);
  s.triangles_ = std::move(triangles);
  return s;
}

bool Indenter::inside(const Eigen::Vector3d& p) const {
  switch (kind_) {
    case Kind::kSphere:
      return p.squaredNorm() <= radius_ * radius_;
    case Kind::kCuboid:
      return (p.cwiseAbs().array() <= half_.array()).all();
    case Kind::kCylinder:
      return std::abs(p.z()) <= 0.5 * height_ && p.head<2>().squaredNorm() <= radius_ * radius_;
    case Kind::kCone: {
      if (p.z() < 0.0 || p.z() > height_) return false;
      const double r = p.z() * std::tan(half_angle_);
      return p.head<2>().squaredNorm() <= r * r;
    }
    case Kind::kMesh: {
      // Parity of crossings along +z.
      int hits = 0;
      const Eigen::Vector3d d(0, 0, 1);
      for (const auto& t : triangles_) {
        const Eigen::Vector3d &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
        const Eigen::Vector3d e1 = b - a, e2 = c - a;
        const Eigen::Vector3d pv = d.cross(e2);
        const double det = e1.dot(pv);
        if (std::abs(det) < 1e-14) continue;
        const Eigen::Vector3d tv = p - a;
        const double u = tv.dot(pv) / det;
        if (u < 0.0 || u > 1.0) continue;
        const Eigen::Vector3d qv = tv.cross(e1);
        const double v = d.dot(qv) / det;
        if (v < 0.0 || u + v > 1.0) continue;
        if (e2.dot(qv) / det > 0.0) ++hits;
      }
      return hits % 2 == 1;
    }
  }
  return false;
}

std::optional<double> Indenter::ray_entry(const Eigen::Vector3d& o, const Eigen::Vector3d& d) const {
  if (kind_ == Kind::kMesh) {
    std::optional<double> best;
    for (const auto& t : triangles_) {
      const Eigen::Vector3d &a = vertices_[t[0]], &b = vertices_[t[1]], &c = vertices_[t[2]];
      const Eigen::Vector3d e1 = b - a, e2 = c - a;
      const Eigen::Vector3d pv = d.cross(e2);
      const double det = e1.dot(pv);
      if (std::abs(det) < 1e-14) continue;
      const Eigen::Vector3d tv = o - a;
      const double u = tv.dot(pv) / det;
      if (u < 0.0 || u > 1.0) continue;
      const Eigen::Vector3d qv = tv.cross(e1);
      const double v = d.dot(qv) / det;
      if (v < 0.0 || u + v > 1.0) continue;
      const double hit = e2.dot(qv) / det;
      if (hit >= 0.0 && (!best || hit < *best)) best = hit;
    }
    return best;
  }

  // Analytic solids: collect the parameters where the ray crosses any
  // bounding surface, then classify the segments between them.
  std::vector<double> ts;
  switch (kind_) {
    case Kind::kSphere:
      quadratic_roots(d.squaredNorm(), 2.0 * o.dot(d), o.squaredNorm() - radius_ * radius_, ts);
      break;
    case Kind::kCuboid:
      for (int k = 0; k < 3; ++k) {
        plane_crossing(o(k), d(k), -half_(k), ts);
        plane_crossing(o(k), d(k), half_(k), ts);
      }
      break;
    case Kind::kCylinder:
      quadratic_roots(d.head<2>().squaredNorm(), 2.0 * o.head<2>().dot(d.head<2>()),
                      o.head<2>().squaredNorm() - radius_ * radius_, ts);
      plane_crossing(o.z(), d.z(), -0.5 * height_, ts);
      plane_crossing(o.z(), d.z(), 0.5 * height_, ts);
      break;
    case Kind::kCone: {
      const double k2 = std::pow(std::tan(half_angle_), 2);
      quadratic_roots(d.head<2>().squaredNorm() - k2 * d.z() * d.z(),
                      2.0 * (o.head<2>().dot(d.head<2>()) - k2 * o.z() * d.z()),
                      o.head<2>().squaredNorm() - k2 * o.z() * o.z(), ts);
      plane_crossing(o.z(), d.z(), 0.0, ts);
      plane_crossing(o.z(), d.z(), height_, ts);
      break;
    }
    case Kind::kMesh:
      break;
  }
  ts.push_back(0.0);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::remove_if(ts.begin(), ts.end(), [](double t) { return !(t >= 0.0) || !std::isfinite(t); }),
           ts.end());
  if (inside(o)) return 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double next = i + 1 < ts.size() ? ts[i + 1] : ts[i] + 1.0;
    if (next - ts[i] <= 0.0) continue;
    if (inside(o + 0.5 * (ts[i] + next) * d)) return ts[i];
  }
  return std::nullopt;
}

Eigen::Vector3d Indenter::support(const Eigen::Vector3d& dir) const {
  switch (kind_) {
    case Kind::kSphere:
      return radius_ * dir.normalized();
    case Kind::kCuboid:
      return Eigen::Vector3d(std::copysign(half_.x(), dir.x()), std::copysign(half_.y(), dir.y()),
                             std::copysign(half_.z(), dir.z()));
    case Kind::kCylinder: {
      const Eigen::Vector2d r = radius_ * unit_xy(dir);
      return Eigen::Vector3d(r.x(), r.y(), std::copysign(0.5 * height_, dir.z()));
    }
    case Kind::kCone: {
      const Eigen::Vector2d r = height_ * std::tan(half_angle_) * unit_xy(dir);
      const Eigen::Vector3d rim(r.x(), r.y(), height_);
      return rim.dot(dir) > 0.0 ? rim : Eigen::Vector3d::Zero();
    }
    case Kind::kMesh: {
      Eigen::Vector3d best = vertices_.front();
      for (const auto& v : vertices_) {
        if (v.dot(dir) > best.dot(dir)) best = v;
      }
      return best;
    }
  }
  return Eigen::Vector3d::Zero();
}

std::string Indenter::describe() const {
  std::ostringstream s;
  switch (kind_) {
    case Kind::kSphere: s << "sphere_r" << radius_; break;
    case Kind::kCuboid: s << "cuboid_" << 2 * half_.x() << "x" << 2 * half_.y() << "x" << 2 * half_.z(); break;
    case Kind::kCylinder: s << "cylinder_r" << radius_; break;
    case Kind::kCone: s << "cone_a" << half_angle_ * 180.0 / std::numbers::pi; break;
    case Kind::kMesh: s << "mesh_" << triangles_.size(); break;
  }
  return s.str();
}

Eigen::Matrix3d rotation_from_degrees(const Eigen::Vector3d& xyz_deg) {
  const Eigen::Vector3d r = xyz_deg * std::numbers::pi / 180.0;
  return (Eigen::AngleAxisd(r.x(), Eigen::Vector3d::UnitX()) * Eigen::AngleAxisd(r.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(r.z(), Eigen::Vector3d::UnitZ()))
      .toRotationMatrix();
}

void to_json(nlohmann::json& j, const Indenter& ind) {
  switch (ind.kind()) {
    case Indenter::Kind::kSphere: j = {{"type", "sphere"}, {"radius", ind.radius()}}; break;
    case Indenter::Kind::kCuboid: {
      const Eigen::Vector3d s = 2.0 * ind.half_extents();
      j = {{"type", "cuboid"}, {"size", {s.x(), s.y(), s.z()}}};
      break;
    }
    case Indenter::Kind::kCylinder:
      j = {{"type", "cylinder"}, {"radius", ind.radius()}, {"height", ind.height()}};
      break;
    case Indenter::Kind::kCone:
      j = {{"type", "cone"}, {"half_angle_deg", ind.half_angle() * 180.0 / std::numbers::pi}, {"height", ind.height()}};
      break;
    case Indenter::Kind::kMesh: throw FormatError("triangulated indenters are not serialized inline");
  }
}

void from_json(const nlohmann::json& j, Indenter& ind) {
  const std::string type = j.at("type").get<std::string>();
  if (type == "sphere") {
    ind = Indenter::sphere(j.at("radius").get<double>());
  } else if (type == "cuboid") {
    const auto s = j.at("size").get<std::vector<double>>();
    if (s.size() != 3) throw FormatError("cuboid size needs three entries");
    ind = Indenter::cuboid(Eigen::Vector3d(s[0], s[1], s[2]));
  } else if (type == "cylinder") {
    ind = Indenter::cylinder(j.at("radius").get<double>(), j.value("height", 10.0));
  } else if (type == "cone") {
    ind = Indenter::cone(j.at("half_angle_deg").get<double>() * std::numbers::pi / 180.0, j.value("height", 10.0));
  } else {
    throw FormatError("unknown indenter type '" + type + "'");
  }
}

void to_json(nlohmann::json& j, const IndenterScene& s) {
  const Eigen::AngleAxisd aa(s.rotation);
  const Eigen::Vector3d rv = aa.axis() * aa.angle();
  j = {{"indenter", s.indenter},
       {"rotation_vector", {rv.x(), rv.y(), rv.z()}},
       {"position", {s.position.x(), s.position.y()}},
       {"depth", s.depth},
       {"offset", {s.offset.x(), s.offset.y()}}};
}

void from_json(const nlohmann::json& j, IndenterScene& s) {
  s.indenter = j.at("indenter").get<Indenter>();
  s.rotation = Eigen::Matrix3d::Identity();
  if (j.contains("rotation_vector")) {
    const auto v = j.at("rotation_vector").get<std::vector<double>>();
    const Eigen::Vector3d rv(v.at(0), v.at(1), v.at(2));
    if (rv.norm() > 0.0) s.rotation = Eigen::AngleAxisd(rv.norm(), rv.normalized()).toRotationMatrix();
  } else if (j.contains("rotation_deg")) {
    const auto v = j.at("rotation_deg").get<std::vector<double>>();
    s.rotation = rotation_from_degrees(Eigen::Vector3d(v.at(0), v.at(1), v.at(2)));
  }
  const auto p = j.value("position", std::vector<double>{0.0, 0.0});
  const auto o = j.value("offset", std::vector<double>{0.0, 0.0});
  s.position = Eigen::Vector2d(p.at(0), p.at(1));
  s.offset = Eigen::Vector2d(o.at(0), o.at(1));
  s.depth = j.at("depth").get<double>();
  if (!(s.depth >= 0.0)) throw ValidationError("indentation depth must be non-negative");
}

}  // namespace gelforce
