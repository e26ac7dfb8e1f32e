// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <random>

#include "gelforce/error.hpp"
#include "gelforce/projection.hpp"

using namespace gelforce;

namespace {

std::vector<Correspondence> correspondences(const ProjectionMatrix& p, const std::vector<Eigen::Vector3d>& world) {
  std::vector<Correspondence> out;
  for (const auto& x : world) out.push_back({x, project(p, x)});
  return out;
}

std::vector<Eigen::Vector3d> random_points(std::mt19937& rng, int n, double z_spread) {
  std::uniform_real_distribution<double> xy(-15.0, 15.0), z(-z_spread, z_spread);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(xy(rng), xy(rng), z(rng));
  return pts;
}

ProjectionMatrix random_camera(std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  ProjectionMatrix p;
  p.kind = CameraModel::kProjective;
  // Intrinsics times a perturbed pose looking down at the gel from 60 mm.
  Eigen::Matrix3d k;
  k << 400, 0, 160, 0, 400, 120, 0, 0, 1;
  Eigen::Matrix<double, 3, 4> rt = Eigen::Matrix<double, 3, 4>::Zero();
  rt.leftCols<3>() = Eigen::Matrix3d::Identity() + 0.05 * Eigen::Matrix3d::NullaryExpr([&] { return u(rng); });
  rt.col(3) << u(rng), u(rng), 60.0;
  p.matrix = k * rt;
  return p;
}

}  // namespace

TEST_CASE("exact affine recovery from four coplanar points") {
  const ProjectionMatrix truth = scaled_projection(10.0, Eigen::Vector2d(160, 120));
  const std::vector<Eigen::Vector3d> corners = {{-8, -6, 0}, {8, -6, 0}, {8, 6, 0}, {-8, 6, 0}};
  const ProjectionFit fit = fit_projection(correspondences(truth, corners));
  CHECK(fit.rms < 1e-9);
  CHECK(fit.projection.kind == CameraModel::kAffine);
  CHECK((fit.projection.matrix - truth.matrix).cwiseAbs().maxCoeff() < 1e-9);
  const Eigen::Vector2d px = project(fit.projection, Eigen::Vector3d(1, 2, 0));
  CHECK(px.x() == doctest::Approx(170.0).epsilon(1e-12));
  CHECK(px.y() == doctest::Approx(140.0).epsilon(1e-12));
}

TEST_CASE("exact projective recovery from eight points") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const ProjectionMatrix truth = random_camera(rng);
    const ProjectionFit fit = fit_projection(correspondences(truth, random_points(rng, 8, 3.0)), CameraModel::kProjective);
    CHECK(fit.rms < 1e-9);
    // Equal up to scale and sign.
    const Eigen::Matrix<double, 3, 4> a = truth.matrix / truth.matrix.norm();
    const Eigen::Matrix<double, 3, 4> b = fit.projection.matrix / fit.projection.matrix.norm();
    CHECK(std::min((a - b).norm(), (a + b).norm()) < 1e-9);
  }
}

TEST_CASE("projection structural identities") {
  ProjectionMatrix id;
  id.matrix << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1;
  const Eigen::Vector2d p = project(id, Eigen::Vector3d(3, 4, 7));
  CHECK(p == Eigen::Vector2d(3, 4));

  std::mt19937 rng(5);
  ProjectionMatrix proj = random_camera(rng);
  proj.matrix.row(2) << 0, 0, 0, 1;
  ProjectionMatrix aff = proj;
  aff.kind = CameraModel::kAffine;
  for (const auto& x : random_points(rng, 20, 10.0)) CHECK((project(proj, x) - project(aff, x)).norm() < 1e-12);
}

TEST_CASE("fit preconditions") {
  const ProjectionMatrix truth = default_projection();
  const std::vector<Eigen::Vector3d> three = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  CHECK_THROWS_WITH_AS(fit_projection(correspondences(truth, three)), doctest::Contains("too few points"),
                       ValidationError);
  const std::vector<Eigen::Vector3d> line = {{0, 0, 0}, {1, 1, 0}, {2, 2, 0}, {3, 3, 0}};
  CHECK_THROWS_WITH_AS(fit_projection(correspondences(truth, line)), doctest::Contains("degenerate"), ValidationError);
  std::mt19937 rng(2);
  CHECK_THROWS_WITH_AS(fit_projection(correspondences(truth, random_points(rng, 5, 1.0)), CameraModel::kProjective),
                       doctest::Contains("too few points"), ValidationError);
  CHECK_THROWS_WITH_AS(fit_projection(correspondences(truth, random_points(rng, 10, 0.0)), CameraModel::kProjective),
                       doctest::Contains("degenerate"), ValidationError);
}

TEST_CASE("point at infinity") {
  ProjectionMatrix p;
  p.kind = CameraModel::kProjective;
  p.matrix << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0;
  CHECK_THROWS_AS(project(p, Eigen::Vector3d(1, 1, 0)), ValidationError);
  CHECK(project(p, Eigen::Vector3d(2, 4, 2)) == Eigen::Vector2d(1, 2));
}

TEST_CASE("noise level is reflected in the residual") {
  std::mt19937 rng(9);
  std::normal_distribution<double> noise(0.0, 1.0);
  const ProjectionMatrix truth = default_projection();
  for (double sigma : {0.1, 0.5, 2.0}) {
    for (CameraModel kind : {CameraModel::kAffine, CameraModel::kProjective}) {
      ProjectionMatrix t = truth;
      t.kind = kind;
      auto corr = correspondences(t, random_points(rng, 200, 2.0));
      for (auto& c : corr) c.pixel += sigma * Eigen::Vector2d(noise(rng), noise(rng));
      const ProjectionFit fit = fit_projection(corr, kind);
      CHECK(fit.rms >= 0.5 * sigma);
      CHECK(fit.rms <= 1.5 * sigma);
    }
  }
}

TEST_CASE("translating world points only changes the translation column") {
  std::mt19937 rng(21);
  ProjectionMatrix truth = random_camera(rng);
  truth.kind = CameraModel::kAffine;
  truth.matrix.row(2) << 0, 0, 0, 1;
  std::normal_distribution<double> noise(0.0, 0.3);
  auto corr = correspondences(truth, random_points(rng, 30, 2.0));
  for (auto& c : corr) c.pixel += Eigen::Vector2d(noise(rng), noise(rng));
  const Eigen::Vector3d t(2.5, -1.0, 0.7);
  auto shifted = corr;
  for (auto& c : shifted) c.world += t;
  const auto a = fit_projection(corr).projection.matrix;
  const auto b = fit_projection(shifted).projection.matrix;
  CHECK((a.leftCols<3>() - b.leftCols<3>()).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((b.col(3) - (a.col(3) - a.leftCols<3>() * t)).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("JSON forms") {
  std::mt19937 rng(4);
  ProjectionMatrix p = random_camera(rng);
  const ProjectionMatrix back = nlohmann::json(p).get<ProjectionMatrix>();
  CHECK(back.kind == p.kind);
  CHECK(back.matrix == p.matrix);
  const nlohmann::json affine = default_projection();
  CHECK(affine["matrix"].size() == 8);
  CHECK(affine.get<ProjectionMatrix>().matrix == default_projection().matrix);
  const auto corr = nlohmann::json::parse(R"([{"world": [1, 2, 3], "pixel": [4, 5]}])").get<std::vector<Correspondence>>();
  REQUIRE(corr.size() == 1);
  CHECK(corr[0].world == Eigen::Vector3d(1, 2, 3));
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"kind": "affine", "matrix": [1, 2, 3]})").get<ProjectionMatrix>(),
                  FormatError);
  CHECK_THROWS_AS(nlohmann::json::parse(R"({"kind": "fisheye", "matrix": []})").get<ProjectionMatrix>(),
                  ValidationError);
}
