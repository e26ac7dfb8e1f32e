// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <set>
#include <sstream>

#include "gelforce/error.hpp"
#include "gelforce/mesh.hpp"
#include "gelforce/tet10.hpp"
#include "helpers.hpp"

using namespace gelforce;
using gelforce::testing::read_fixture;

namespace {

const char* kOneTet = R"(** reference tetrahedron
*NODE
1, 0.0, 0.0, 0.0
2, 1.0, 0.0, 0.0
3, 0.0, 1.0, 0.0
4, 0.0, 0.0, 1.0
5, 0.5, 0.0, 0.0
6, 0.5, 0.5, 0.0
7, 0.0, 0.5, 0.0
8, 0.0, 0.0, 0.5
9, 0.5, 0.0, 0.5
10, 0.0, 0.5, 0.5
*ELEMENT, TYPE=C3D10
1, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10
)";

std::string with(const std::string& base, const std::string& from, const std::string& to) {
  std::string s = base;
  s.replace(s.find(from), from.size(), to);
  return s;
}

std::string round_trip(const Mesh& m) {
  std::ostringstream out;
  write_inp_mesh(out, m);
  return out.str();
}

void check_same_tables(const Mesh& a, const Mesh& b) {
  CHECK(a.node_ids() == b.node_ids());
  CHECK(a.coords() == b.coords());
  CHECK(a.element_ids() == b.element_ids());
  CHECK(a.elements() == b.elements());
  CHECK(a.node_sets() == b.node_sets());
  CHECK(a.element_sets() == b.element_sets());
  CHECK(a.surfaces() == b.surfaces());
}

double corner_jacobian(const Mesh& m, int e) {
  const Element& el = m.element(e);
  Eigen::Matrix3d j;
  for (int c = 0; c < 3; ++c) j.col(c) = m.node(el[c + 1]) - m.node(el[0]);
  return j.determinant();
}

int elements_near_top(const Mesh& m, double within) {
  int count = 0;
  for (int e = 0; e < m.num_elements(); ++e) {
    double z = 0.0;
    for (int c = 0; c < 4; ++c) z += m.node(m.element(e)[c]).z() / 4;
    if (z > -within) ++count;
  }
  return count;
}

}  // namespace

TEST_CASE("single reference tetrahedron") {
  const InpParseResult r = parse_inp(kOneTet);
  CHECK(r.mesh.num_nodes() == 10);
  REQUIRE(r.mesh.num_elements() == 1);
  CHECK(corner_jacobian(r.mesh, 0) == doctest::Approx(1.0));
  CHECK(volume(r.mesh) == doctest::Approx(1.0 / 6));
  CHECK(r.warnings.empty());
}

TEST_CASE("dangling node reference") {
  const std::string deck = with(kOneTet, "1, 1, 2, 3, 4, 5", "1, 999, 2, 3, 4, 5");
  CHECK_THROWS_WITH_AS(parse_inp(deck), doctest::Contains("missing node"), ParseError);
}

TEST_CASE("malformed numeric field reports its position") {
  const std::string deck = with(kOneTet, "3, 0.0, 1.0, 0.0", "3, 0.0, 1.x, 0.0");
  try {
    parse_inp(deck);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 5);
    CHECK(e.column() == 9);
  }
}

TEST_CASE("duplicate ids") {
  CHECK_THROWS_WITH_AS(parse_inp(with(kOneTet, "2, 1.0, 0.0, 0.0", "1, 1.0, 0.0, 0.0")), doctest::Contains("duplicate node"),
                       ParseError);
  const std::string twice = std::string(kOneTet) + "1, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10\n";
  CHECK_THROWS_WITH_AS(parse_inp(twice), doctest::Contains("duplicate element"), ParseError);
}

TEST_CASE("unsupported keywords are skipped with warnings") {
  const std::string deck = std::string("*HEADING\nsome title\n") + kOneTet +
                           "*MATERIAL, NAME=GEL\n*ELASTIC\n1.0, 0.3\n*STEP\n*STATIC\n*END STEP\n";
  const InpParseResult r = parse_inp(deck);
  CHECK(r.mesh.num_elements() == 1);
  CHECK(r.warnings.size() >= 4);
}

TEST_CASE("generate ranges, continuation lines, nested sets and surfaces") {
  const std::string deck = with(kOneTet, "1, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10\n", "1, 1, 2, 3, 4, 5, 6, 7, 8,\n9, 10\n") +
                           "*nset, nset=base, generate\n1, 3\n"
                           "*NSET, NSET=ALLCORNERS\nBASE, 4\n"
                           "*ELSET, ELSET=ONE\n1\n"
                           "*SURFACE, NAME=BOTTOM, TYPE=ELEMENT\nONE, S1\n"
                           "*SURFACE, NAME=SIDE\n1, s2\n";
  const InpParseResult r = parse_inp(deck);
  const Mesh& m = r.mesh;
  CHECK(m.node_set("BASE") == std::vector<int>{0, 1, 2});
  CHECK(m.node_set("ALLCORNERS") == std::vector<int>{0, 1, 2, 3});
  REQUIRE(m.surface("BOTTOM").size() == 1);
  CHECK(m.surface("BOTTOM")[0] == SurfaceFace{0, 0});
  CHECK(m.surface("SIDE")[0] == SurfaceFace{0, 1});
  // Face S1 holds corners 1-2-3 and their mid-edge nodes, all at z = 0.
  for (int n : m.face_nodes(m.surface("BOTTOM")[0])) CHECK(m.node(n).z() == 0.0);
  CHECK_THROWS_AS(parse_inp(std::string(kOneTet) + "*SURFACE, NAME=X\n1, S5\n"), ParseError);
  CHECK_THROWS_AS(parse_inp(std::string(kOneTet) + "*NSET, NSET=X\nNOPE\n"), ParseError);
}

TEST_CASE("structural invariants are enforced") {
  // Mid-edge node pulled far from its edge midpoint.
  CHECK_THROWS_AS(parse_inp(with(kOneTet, "5, 0.5, 0.0, 0.0", "5, 0.5, 0.3, 0.0")), ValidationError);
  // Corners 2 and 3 swapped: negative orientation.
  CHECK_THROWS_AS(parse_inp(with(kOneTet, "1, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10", "1, 1, 3, 2, 4, 7, 6, 5, 8, 10, 9")),
                  ValidationError);
  // Repeated node within an element.
  CHECK_THROWS_AS(parse_inp(with(kOneTet, "1, 1, 2, 3, 4, 5", "1, 1, 2, 3, 4, 4")), ValidationError);
}

TEST_CASE("fixture deck is a parse/emit fixed point") {
  const InpParseResult a = parse_inp(read_fixture("gel_coarse.inp"));
  CHECK(a.warnings.empty());
  CHECK(a.mesh.num_elements() == 576);
  const InpParseResult b = parse_inp(round_trip(a.mesh));
  check_same_tables(a.mesh, b.mesh);
  CHECK(round_trip(b.mesh) == round_trip(a.mesh));
  // The fixture was produced by the box generator.
  check_same_tables(a.mesh, meshgen_box(BoxSpec{{32, 24, 5}, {8, 6, 2}, 1.0}));
}

TEST_CASE("minimal box") {
  const Mesh m = meshgen_box(BoxSpec{{1, 1, 1}, {1, 1, 1}, 1.0});
  CHECK(m.num_elements() == 6);
  CHECK(m.num_nodes() == 27);
  CHECK(m.surface("CONTACT").size() == 2);
  CHECK(m.node_set("FIXED").size() == 9);
  CHECK(volume(m) == doctest::Approx(1.0).epsilon(1e-14));
  for (int e = 0; e < m.num_elements(); ++e) {
    const Element& el = m.element(e);
    for (int k = 0; k < 6; ++k) {
      const Vec3 mid = 0.5 * (m.node(el[tet10::kEdges[k][0]]) + m.node(el[tet10::kEdges[k][1]]));
      CHECK((m.node(el[4 + k]) - mid).norm() == 0.0);
    }
  }
  for (const SurfaceFace& f : m.surface("CONTACT")) {
    for (int n : m.face_nodes(f)) CHECK(m.node(n).z() == 0.0);
  }
}

TEST_CASE("default gel mesh counts") {
  const Mesh m = meshgen_box(default_gel_box());
  CHECK(m.num_nodes() == 16317);
  CHECK(m.num_elements() == 10368);
  CHECK(m.surface("CONTACT").size() == 864);
  CHECK(m.node_set("FIXED").size() == 49 * 37);
  CHECK(m.surface_nodes("CONTACT").size() == 49 * 37);
}

TEST_CASE("volume equals the box volume") {
  for (const BoxSpec& s : {BoxSpec{{32, 24, 5}, {8, 6, 2}, 1.0}, BoxSpec{{3, 7, 2}, {3, 2, 5}, 3.0},
                           BoxSpec{{1.5, 0.5, 4}, {1, 3, 4}, 1.7}}) {
    const Mesh m = meshgen_box(s);
    const double v = s.dimensions.prod();
    CHECK(std::abs(volume(m) - v) <= 1e-12 * v);
  }
}

TEST_CASE("surface bias refines the top layer") {
  const BoxSpec uniform{{32, 24, 5}, {8, 6, 4}, 1.0};
  BoxSpec biased = uniform;
  biased.bias = 3.0;
  const Mesh a = meshgen_box(uniform), b = meshgen_box(biased);
  CHECK(elements_near_top(b, 1.0) > elements_near_top(a, 1.0));
  // Top layer is three times thinner than a uniform one.
  double top = -5.0;
  for (int n = 0; n < b.num_nodes(); ++n) {
    if (b.node(n).z() < 0.0) top = std::max(top, b.node(n).z());
  }
  CHECK(top == doctest::Approx(-5.0 / 4 / 3 / 2));  // first mid-edge level below the top
}

TEST_CASE("generated meshes are mirror symmetric") {
  const Mesh m = meshgen_box(BoxSpec{{32, 24, 5}, {8, 6, 2}, 2.0});
  auto centroids = [&](double sx, double sy) {
    std::set<std::array<long long, 3>> out;
    for (int e = 0; e < m.num_elements(); ++e) {
      Vec3 c = Vec3::Zero();
      for (int k = 0; k < 4; ++k) c += m.node(m.element(e)[k]) / 4;
      out.insert({std::llround(sx * c.x() * 1e6), std::llround(sy * c.y() * 1e6), std::llround(c.z() * 1e6)});
    }
    return out;
  };
  const auto base = centroids(1, 1);
  CHECK(centroids(-1, 1) == base);
  CHECK(centroids(1, -1) == base);
}

TEST_CASE("generator preconditions") {
  CHECK_THROWS_AS(meshgen_box(BoxSpec{{0, 1, 1}, {1, 1, 1}, 1.0}), ValidationError);
  CHECK_THROWS_AS(meshgen_box(BoxSpec{{1, -1, 1}, {1, 1, 1}, 1.0}), ValidationError);
  CHECK_THROWS_AS(meshgen_box(BoxSpec{{1, 1, 1}, {1, 0, 1}, 1.0}), ValidationError);
  CHECK_THROWS_AS(meshgen_box(BoxSpec{{1, 1, 1}, {1, 1, 1}, 0.5}), ValidationError);
}

TEST_CASE("unknown sets and ids") {
  const Mesh m = meshgen_box(BoxSpec{{1, 1, 1}, {1, 1, 1}, 1.0});
  CHECK_THROWS_AS(m.node_set("NOPE"), ValidationError);
  CHECK_THROWS_AS(m.surface("NOPE"), ValidationError);
  CHECK_THROWS_AS(m.node_index(12345), ValidationError);
}
