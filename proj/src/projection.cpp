// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/projection.hpp"

#include <cmath>

#include <Eigen/Geometry>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "gelforce/error.hpp"

namespace gelforce {

namespace {

using Mat34 = Eigen::Matrix<double, 3, 4>;

void check_finite(const std::vector<Correspondence>& corr) {
  for (const auto& c : corr) {
    if (!c.world.allFinite() || !c.pixel.allFinite()) throw ValidationError("correspondence has non-finite coordinates");
  }
}

// Similarity transform moving the centroid to the origin with mean distance sqrt(dim).
template <int Dim>
Eigen::Matrix<double, Dim + 1, Dim + 1> normalizer(const std::vector<Eigen::Matrix<double, Dim, 1>>& pts) {
  Eigen::Matrix<double, Dim, 1> mean = Eigen::Matrix<double, Dim, 1>::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double dist = 0.0;
  for (const auto& p : pts) dist += (p - mean).norm();
  dist /= static_cast<double>(pts.size());
  const double s = dist > 0.0 ? std::sqrt(double(Dim)) / dist : 1.0;
  Eigen::Matrix<double, Dim + 1, Dim + 1> t = Eigen::Matrix<double, Dim + 1, Dim + 1>::Identity();
  t.template topLeftCorner<Dim, Dim>() *= s;
  t.template topRightCorner<Dim, 1>() = -s * mean;
  return t;
}

ProjectionMatrix fit_affine(const std::vector<Correspondence>& corr) {
  if (corr.size() < 4) throw ValidationError("too few points: affine fit needs at least 4 correspondences");
  const Eigen::Index n = static_cast<Eigen::Index>(corr.size());
  // Center the world points so the minimum-norm solution does not depend on
  // where the origin sits relative to the point plane.
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (const auto& c : corr) mean += c.world;
  mean /= static_cast<double>(n);
  Eigen::MatrixXd a(n, 4);
  Eigen::MatrixXd b(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    a.row(i) << (corr[i].world - mean).transpose(), 1.0;
    b.row(i) = corr[i].pixel.transpose();
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  cod.setThreshold(1e-10);
  if (cod.rank() < 3) throw ValidationError("degenerate configuration: affine fit needs non-collinear world points");
  const Eigen::Matrix<double, 4, 2> x = cod.solve(b);
  ProjectionMatrix p;
  p.kind = CameraModel::kAffine;
  p.matrix.topLeftCorner<2, 3>() = x.topRows<3>().transpose();
  p.matrix.block<2, 1>(0, 3) = x.row(3).transpose() - x.topRows<3>().transpose() * mean;
  p.matrix.row(2) << 0, 0, 0, 1;
  return p;
}

ProjectionMatrix fit_projective(const std::vector<Correspondence>& corr) {
  if (corr.size() < 6) throw ValidationError("too few points: projective fit needs at least 6 correspondences");
  std::vector<Eigen::Vector3d> world;
  std::vector<Eigen::Vector2d> pixel;
  for (const auto& c : corr) {
    world.push_back(c.world);
    pixel.push_back(c.pixel);
  }
  const Eigen::Matrix4d tw = normalizer<3>(world);
  const Eigen::Matrix3d tp = normalizer<2>(pixel);

  Eigen::Matrix<double, Eigen::Dynamic, 4> centered(world.size(), 4);
  for (std::size_t i = 0; i < world.size(); ++i) centered.row(i) = (tw * world[i].homogeneous()).transpose();
  // Coplanar world points leave a one-parameter family of exact solutions.
  Eigen::JacobiSVD<Eigen::MatrixXd> plane(centered.leftCols<3>());
  if (plane.singularValues()(2) < 1e-8 * plane.singularValues()(0)) {
    throw ValidationError("degenerate configuration: projective fit needs world points that are not coplanar");
  }

  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2 * world.size(), 12);
  for (std::size_t i = 0; i < world.size(); ++i) {
    const Eigen::RowVector4d x = centered.row(i);
    const Eigen::Vector3d u = tp * pixel[i].homogeneous();
    const auto r = static_cast<Eigen::Index>(2 * i);
    a.block<1, 4>(r, 0) = u(2) * x;
    a.block<1, 4>(r, 8) = -u(0) * x;
    a.block<1, 4>(r + 1, 4) = u(2) * x;
    a.block<1, 4>(r + 1, 8) = -u(1) * x;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
  const Eigen::VectorXd s = svd.singularValues();
  if (s(10) < 1e-10 * s(0)) throw ValidationError("degenerate configuration: projective solution is not unique");
  const Eigen::VectorXd h = svd.matrixV().col(11);
  Mat34 pn;
  pn << h.segment<4>(0).transpose(), h.segment<4>(4).transpose(), h.segment<4>(8).transpose();

  ProjectionMatrix p;
  p.kind = CameraModel::kProjective;
  p.matrix = tp.inverse() * pn * tw;
  p.matrix /= p.matrix.norm();
  // Sign chosen so that points in front of the camera have w > 0.
  double w = 0.0;
  for (const auto& x : world) w += p.matrix.row(2).dot(x.homogeneous());
  if (w < 0.0) p.matrix = -p.matrix;
  return p;
}

}  // namespace

void ProjectionMatrix::check() const {
  if (!matrix.allFinite()) throw ValidationError("projection matrix has non-finite entries");
  if (kind == CameraModel::kAffine) {
    if (matrix.topLeftCorner<2, 3>().norm() == 0.0) throw ValidationError("affine projection has a zero linear block");
    return;
  }
  const Eigen::MatrixXd m = matrix;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  if (svd.singularValues()(2) <= 1e-12 * svd.singularValues()(0)) {
    throw ValidationError("projective matrix must have rank 3");
  }
}

ProjectionFit fit_projection(const std::vector<Correspondence>& corr, CameraModel kind) {
  check_finite(corr);
  ProjectionFit fit;
  fit.projection = kind == CameraModel::kAffine ? fit_affine(corr) : fit_projective(corr);
  fit.rms = reprojection_rms(fit.projection, corr);
  return fit;
}

Eigen::Vector2d project(const ProjectionMatrix& p, const Eigen::Vector3d& x) {
  if (p.kind == CameraModel::kAffine) return p.affine_block() * x.homogeneous();
  const Eigen::Vector3d h = p.matrix * x.homogeneous();
  const double scale = p.matrix.row(2).cwiseAbs().sum() * std::max(1.0, x.cwiseAbs().maxCoeff());
  if (!(std::abs(h(2)) > 1e-12 * scale)) throw ValidationError("point projects to infinity");
  return h.hnormalized();
}

double reprojection_rms(const ProjectionMatrix& p, const std::vector<Correspondence>& corr) {
  if (corr.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : corr) sum += (project(p, c.world) - c.pixel).squaredNorm();
  return std::sqrt(sum / static_cast<double>(corr.size()));
}

ProjectionMatrix scaled_projection(double px_per_mm, const Eigen::Vector2d& origin_px) {
  ProjectionMatrix p;
  p.matrix << px_per_mm, 0, 0, origin_px.x(),  //
      0, px_per_mm, 0, origin_px.y(),          //
      0, 0, 0, 1;
  return p;
}

ProjectionMatrix default_projection() { return scaled_projection(10.0, Eigen::Vector2d(160.0, 120.0)); }

std::string to_string(CameraModel kind) { return kind == CameraModel::kAffine ? "affine" : "projective"; }

CameraModel camera_model_from_string(const std::string& s) {
  if (s == "affine") return CameraModel::kAffine;
  if (s == "projective") return CameraModel::kProjective;
  throw ValidationError("unknown camera model '" + s + "' (expected affine or projective)");
}

void to_json(nlohmann::json& j, const ProjectionMatrix& p) {
  const int rows = p.kind == CameraModel::kAffine ? 2 : 3;
  std::vector<double> m;
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < 4; ++c) m.push_back(p.matrix(r, c));
  }
  j = {{"kind", to_string(p.kind)}, {"rows", rows}, {"matrix", m}};
}

void from_json(const nlohmann::json& j, ProjectionMatrix& p) {
  p.kind = camera_model_from_string(j.at("kind").get<std::string>());
  const auto m = j.at("matrix").get<std::vector<double>>();
  const int rows = p.kind == CameraModel::kAffine ? 2 : 3;
  if (m.size() != static_cast<std::size_t>(4 * rows)) {
    throw FormatError("projection '" + to_string(p.kind) + "' needs " + std::to_string(4 * rows) + " entries");
  }
  p.matrix.setZero();
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < 4; ++c) p.matrix(r, c) = m[4 * r + c];
  }
  if (p.kind == CameraModel::kAffine) p.matrix.row(2) << 0, 0, 0, 1;
  p.check();
}

void to_json(nlohmann::json& j, const Correspondence& c) {
  j = {{"world", {c.world.x(), c.world.y(), c.world.z()}}, {"pixel", {c.pixel.x(), c.pixel.y()}}};
}

void from_json(const nlohmann::json& j, Correspondence& c) {
  const auto w = j.at("world").get<std::vector<double>>();
  const auto p = j.at("pixel").get<std::vector<double>>();
  if (w.size() != 3 || p.size() != 2) throw FormatError("correspondence needs world [x,y,z] and pixel [u,v]");
  c.world = Eigen::Vector3d(w[0], w[1], w[2]);
  c.pixel = Eigen::Vector2d(p[0], p[1]);
}

}  // namespace gelforce
