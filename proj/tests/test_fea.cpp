// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <map>
#include <random>

#include "gelforce/error.hpp"
#include "gelforce/fea.hpp"

using namespace gelforce;

namespace {

Mesh coarse_gel() { return meshgen_box(BoxSpec{{32, 24, 5}, {8, 6, 2}, 1.0}); }

// Cauchy principal stresses of the Neo-Hookean law for F = diag(l1, l2, l3),
// written out by hand from U(l1, l2, l3).
Vec3 principal_stress(const Material& m, const Vec3& l) {
  const double j = l.prod();
  const double i1 = l.squaredNorm();
  const double a = std::pow(j, -2.0 / 3.0);
  Vec3 s;
  for (int i = 0; i < 3; ++i) s(i) = 2 * m.c10 / j * a * (l(i) * l(i) - i1 / 3) + 2 / m.d1 * (j - 1);
  return s;
}

// Lateral stretch that makes the lateral stress vanish under axial stretch l3.
double lateral_stretch(const Material& m, double l3) {
  double lo = 0.9, hi = 1.1;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    // Lateral stress decreases as the lateral stretch shrinks.
    (principal_stress(m, Vec3(mid, mid, l3))(0) > 0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// Unit cube with rollers on x = -1/2, y = -1/2 and the bottom, top face moved by -strain.
BoundaryConditions uniaxial(const Mesh& m, double strain) {
  BoundaryConditions bc;
  for (int n = 0; n < m.num_nodes(); ++n) {
    const Vec3& x = m.node(n);
    const int id = m.node_id(n);
    if (x.x() == -0.5) bc.components.push_back({id, 0, 0.0});
    if (x.y() == -0.5) bc.components.push_back({id, 1, 0.0});
    if (x.z() == -1.0) bc.components.push_back({id, 2, 0.0});
    if (x.z() == 0.0) bc.components.push_back({id, 2, -strain});
  }
  return bc;
}

double sum_abs_z(const std::vector<Vec3>& v) {
  double s = 0.0;
  for (const Vec3& f : v) s += std::abs(f.z());
  return s;
}

Vec3 sum(const std::vector<Vec3>& v) {
  Vec3 s = Vec3::Zero();
  for (const Vec3& f : v) s += f;
  return s;
}

}  // namespace

TEST_CASE("reference state is an equilibrium") {
  const Mesh m = coarse_gel();
  IndenterScene scene;
  const BoundaryConditions bc = tie_contact(m, scene);
  CHECK(bc.prescribed.empty());
  CHECK(bc.fixed_nodes.size() == m.node_set("FIXED").size());
  const Solution sol = solve_static(m, default_gel_material(), bc);
  CHECK(sol.displacement.cwiseAbs().maxCoeff() == 0.0);
  for (const Vec3& r : sol.reactions) CHECK(r.norm() == 0.0);
}

TEST_CASE("tangent stiffness matches finite differences of the internal force") {
  const Mesh m = meshgen_box(BoxSpec{{1, 1, 1}, {1, 1, 1}, 1.0});
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u01(-0.03, 0.03);
  Eigen::VectorXd u(3 * m.num_nodes());
  for (int i = 0; i < u.size(); ++i) u(i) = u01(rng);
  const Material mat = default_gel_material();
  const Eigen::MatrixXd k = Eigen::MatrixXd(tangent_stiffness(m, mat, u));
  const double h = 1e-7;
  double worst = 0.0;
  for (int j = 0; j < u.size(); ++j) {
    Eigen::VectorXd up = u, um = u;
    up(j) += h;
    um(j) -= h;
    const Eigen::VectorXd col = (internal_force(m, mat, up) - internal_force(m, mat, um)) / (2 * h);
    worst = std::max(worst, (col - k.col(j)).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6 * k.cwiseAbs().maxCoeff());
  CHECK((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("uniaxial patch test reproduces the closed-form state") {
  const Mesh m = meshgen_box(BoxSpec{{1, 1, 1}, {1, 1, 1}, 1.0});
  const Material mat = default_gel_material();
  const double strain = 0.01;
  SolverOptions opts;
  opts.increments = 1;
  opts.tol_abs = 1e-13;
  const Solution sol = solve_static(m, mat, uniaxial(m, strain), opts);

  const double l3 = 1 - strain;
  const double lt = lateral_stretch(mat, l3);
  const Vec3 sigma = principal_stress(mat, Vec3(lt, lt, l3));
  CHECK(std::abs(sigma(0)) < 1e-14);

  // Homogeneous displacement field.
  double worst = 0.0;
  for (int n = 0; n < m.num_nodes(); ++n) {
    const Vec3& x = m.node(n);
    const Vec3 expected((lt - 1) * (x.x() + 0.5), (lt - 1) * (x.y() + 0.5), -strain * (x.z() + 1));
    worst = std::max(worst, (Vec3(sol.displacement.col(n)) - expected).cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-6 * std::abs(lt - 1));

  // Axial force on the top face = Cauchy stress times the deformed area.
  double top = 0.0;
  for (std::size_t i = 0; i < sol.constrained.size(); ++i) {
    if (m.node(sol.constrained[i]).z() == 0.0) top += sol.reactions[i].z();
  }
  const double expected = sigma(2) * lt * lt;
  CHECK(std::abs(top - expected) < 1e-6 * std::abs(expected));

  // Quadratic convergence over the last three residuals.
  const auto& r = sol.trace.back().residuals;
  REQUIRE(r.size() >= 3);
  const std::size_t n = r.size();
  CHECK(r[n - 2] <= 1.0 * r[n - 3] * r[n - 3]);
  CHECK(r[n - 1] <= 1.0 * r[n - 2] * r[n - 2]);
}

TEST_CASE("asymptotic Newton rate is quadratic with a stable constant") {
  const Mesh m = meshgen_box(BoxSpec{{1, 1, 1}, {1, 1, 1}, 1.0});
  SolverOptions opts;
  opts.increments = 1;
  opts.tol_abs = 1e-12;
  const Solution sol = solve_static(m, default_gel_material(), uniaxial(m, 0.1), opts);
  const auto& r = sol.trace.back().residuals;
  // Rate constants from consecutive pairs above the round-off floor.
  std::vector<double> c;
  for (std::size_t k = 1; k < r.size() && r[k] > 1e-13; ++k) c.push_back(r[k] / (r[k - 1] * r[k - 1]));
  REQUIRE(c.size() >= 2);
  for (double ck : c) CHECK(ck < 1.0);
  CHECK(c.back() == doctest::Approx(c[c.size() - 2]).epsilon(0.2));
}

TEST_CASE("contact ties a spherical cap") {
  const Mesh m = coarse_gel();
  IndenterScene scene;
  scene.depth = 1.0;
  const BoundaryConditions bc = tie_contact(m, scene);
  const double radius = std::sqrt(1.0 * (15.0 - 1.0));
  REQUIRE(!bc.prescribed.empty());
  for (const auto& [id, u] : bc.prescribed) {
    const Vec3& x = m.node(m.node_index(id));
    const double r = x.head<2>().norm();
    CHECK(r <= radius + 1e-9);
    // Node moved onto the sphere surface.
    CHECK(-u.z() == doctest::Approx(std::sqrt(7.5 * 7.5 - r * r) - 6.5).epsilon(1e-12));
    CHECK(u.head<2>().norm() == 0.0);
  }
  for (int n : m.surface_nodes("CONTACT")) {
    if (m.node(n).head<2>().norm() < radius - 1e-6) CHECK(bc.prescribed.count(m.node_id(n)) == 1);
  }

  IndenterScene shifted = scene;
  shifted.offset = Eigen::Vector2d(0.5, 0.0);
  const BoundaryConditions bs = tie_contact(m, shifted);
  REQUIRE(bs.prescribed.size() == bc.prescribed.size());
  for (const auto& [id, u] : bs.prescribed) {
    CHECK(u.x() == 0.5);
    CHECK(u.y() == 0.0);
    CHECK(u.z() == bc.prescribed.at(id).z());
  }
}

TEST_CASE("contact scene errors") {
  const Mesh m = coarse_gel();
  IndenterScene off;
  off.depth = 1.0;
  off.position = Eigen::Vector2d(100.0, 0.0);
  CHECK_THROWS_AS(tie_contact(m, off), ValidationError);
  IndenterScene far;
  far.depth = 1.0;
  far.offset = Eigen::Vector2d(40.0, 0.0);
  CHECK_THROWS_AS(tie_contact(m, far), ValidationError);
  IndenterScene negative;
  negative.depth = -0.1;
  CHECK_THROWS_AS(tie_contact(m, negative), ValidationError);
}

TEST_CASE("boundary condition consistency") {
  const Mesh m = coarse_gel();
  BoundaryConditions bc;
  bc.fixed_nodes = {1};
  bc.prescribed[1] = Vec3(0, 0, -0.1);
  CHECK_THROWS_AS(bc.check(m), ValidationError);
  BoundaryConditions missing;
  missing.fixed_nodes = {999999};
  CHECK_THROWS_AS(missing.check(m), ValidationError);
  CHECK_THROWS_AS(solve_static(m, default_gel_material(), missing), ValidationError);
}

TEST_CASE("sphere indentation: monotone load, conservation, equilibrium, symmetry") {
  const Mesh m = coarse_gel();
  const Material mat = default_gel_material();
  SolverOptions opts;
  opts.tol_abs = 1e-11;
  double previous = 0.0;
  for (double depth : {0.5, 1.0, 1.5, 2.0}) {
    IndenterScene scene;
    scene.depth = depth;
    const BoundaryConditions bc = tie_contact(m, scene);
    const Solution sol = solve_static(m, mat, bc, opts);
    CHECK(sol.trace.back().converged);
    CHECK(sol.trace.back().load_to == 1.0);

    Vec3 contact = Vec3::Zero();
    double magnitude = 0.0;
    for (const auto& [id, u] : bc.prescribed) {
      contact += sol.reaction(m.node_index(id));
    }
    for (const Vec3& r : sol.reactions) magnitude += r.norm();
    const double fz = -contact.z();
    CHECK(fz > previous);
    previous = fz;

    // Global equilibrium.
    CHECK(sol.total_reaction().norm() <= 1e-9 * magnitude);

    // Faces carry the contact reactions exactly.
    const std::vector<Vec3> faces = surface_element_forces(m, sol);
    const Vec3 face_sum = sum(faces);
    CHECK(std::abs(face_sum.z() - contact.z()) <= 1e-12 * std::abs(contact.z()));
    CHECK(std::abs(face_sum.x()) < 0.01 * sum_abs_z(faces));
    CHECK(std::abs(face_sum.y()) < 0.01 * sum_abs_z(faces));
  }
}

TEST_CASE("free nodes carry no residual force") {
  const Mesh m = coarse_gel();
  IndenterScene scene;
  scene.depth = 1.0;
  const BoundaryConditions bc = tie_contact(m, scene);
  const Material mat = default_gel_material();
  const Solution sol = solve_static(m, mat, bc);
  const Eigen::VectorXd f = internal_force(m, mat, sol.flat_displacement());
  std::vector<char> constrained(m.num_nodes(), 0);
  for (int n : sol.constrained) constrained[n] = 1;
  double worst = 0.0;
  for (int n = 0; n < m.num_nodes(); ++n) {
    if (!constrained[n]) worst = std::max(worst, f.segment<3>(3 * n).norm());
  }
  CHECK(worst < 1e-8);
}

TEST_CASE("mirrored scene mirrors the shear forces") {
  const Mesh m = coarse_gel();
  const Material mat = default_gel_material();
  auto solve_at = [&](double x, double ox) {
    IndenterScene s;
    s.depth = 1.0;
    s.position = Eigen::Vector2d(x, 1.0);
    s.offset = Eigen::Vector2d(ox, 0.2);
    return surface_element_forces(m, solve_static(m, mat, tie_contact(m, s)));
  };
  const std::vector<Vec3> a = solve_at(3.0, 0.3), b = solve_at(-3.0, -0.3);
  const auto& faces = m.surface("CONTACT");
  // Pair faces by mirrored centroids.
  std::map<std::pair<long long, long long>, int> index;
  auto key = [&](int i, double sx) {
    Vec3 c = Vec3::Zero();
    for (int k = 0; k < 3; ++k) c += m.node(m.face_nodes(faces[i])[k]) / 3;
    return std::make_pair(std::llround(sx * c.x() * 1e6), std::llround(c.y() * 1e6));
  };
  for (std::size_t i = 0; i < faces.size(); ++i) index[key(static_cast<int>(i), 1.0)] = static_cast<int>(i);
  double scale = 0.0, worst = 0.0;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const auto it = index.find(key(static_cast<int>(i), -1.0));
    REQUIRE(it != index.end());
    const Vec3& fa = a[i];
    const Vec3& fb = b[it->second];
    worst = std::max(worst, (Vec3(-fb.x(), fb.y(), fb.z()) - fa).norm());
    scale = std::max(scale, fa.norm());
  }
  CHECK(worst < 1e-6 * scale);
}

TEST_CASE("thread count does not change the result") {
  const Mesh m = coarse_gel();
  IndenterScene scene;
  scene.depth = 1.0;
  const BoundaryConditions bc = tie_contact(m, scene);
  SolverOptions one, three;
  three.threads = 3;
  const Solution a = solve_static(m, default_gel_material(), bc, one);
  const Solution b = solve_static(m, default_gel_material(), bc, three);
  CHECK(a.displacement == b.displacement);
  CHECK(a.reactions == b.reactions);
}

TEST_CASE("warm start from a converged state") {
  const Mesh m = coarse_gel();
  IndenterScene scene;
  scene.depth = 1.5;
  const BoundaryConditions bc = tie_contact(m, scene);
  const Material mat = default_gel_material();
  const Solution cold = solve_static(m, mat, bc);
  SolverOptions warm;
  warm.warm_start = cold.flat_displacement();
  const Solution again = solve_static(m, mat, bc, warm);
  REQUIRE(again.trace.size() == 1);
  CHECK(again.trace[0].residuals.size() <= 2);
  // The displacement field is linear in C10 when D1 follows the Poisson ratio,
  // so a different modulus converges from the same start without iterating.
  const Material stiffer = Material::from_poisson(2 * kGelC10, kGelPoisson);
  const Solution scaled = solve_static(m, stiffer, bc, warm);
  REQUIRE(scaled.trace.size() == 1);
  CHECK(scaled.trace[0].residuals.size() <= 3);
  CHECK(scaled.total_reaction().norm() < 1e-6);
  for (std::size_t i = 0; i < cold.reactions.size(); ++i) {
    CHECK((scaled.reactions[i] - 2 * cold.reactions[i]).norm() < 1e-6 + 1e-6 * cold.reactions[i].norm());
  }
}

TEST_CASE("solution JSON round trip") {
  const Mesh m = coarse_gel();
  IndenterScene scene;
  scene.depth = 0.5;
  const Solution sol = solve_static(m, default_gel_material(), tie_contact(m, scene));
  const Solution back = solution_from_json(m, nlohmann::json::parse(solution_to_json(m, sol).dump()));
  CHECK(back.displacement == sol.displacement);
  CHECK(back.constrained == sol.constrained);
  CHECK(back.reactions == sol.reactions);
  CHECK(back.trace.size() == sol.trace.size());
}

TEST_CASE("impossible loading is reported") {
  const Mesh m = meshgen_box(BoxSpec{{1, 1, 1}, {1, 1, 1}, 1.0});
  BoundaryConditions bc;
  for (int n : m.node_set("FIXED")) bc.fixed_nodes.push_back(m.node_id(n));
  // Push one top corner through the bottom.
  for (int n = 0; n < m.num_nodes(); ++n) {
    if (m.node(n) == Vec3(0.5, 0.5, 0.0)) bc.prescribed[m.node_id(n)] = Vec3(0, 0, -3.0);
  }
  SolverOptions opts;
  opts.max_cutbacks = 3;
  CHECK_THROWS_AS(solve_static(m, default_gel_material(), bc, opts), SolverError);
}
