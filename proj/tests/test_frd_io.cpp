// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include "gelforce/error.hpp"
#include "gelforce/frd_io.hpp"
#include "helpers.hpp"

using namespace gelforce;
using gelforce::testing::read_fixture;

namespace {

// Single reference tetrahedron with exact mid-edge nodes.
Mesh one_tet() {
  Mesh m;
  const Vec3 c[4] = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  for (int i = 0; i < 4; ++i) m.add_node(i + 1, c[i]);
  const int edges[6][2] = {{0, 1}, {1, 2}, {2, 0}, {0, 3}, {1, 3}, {2, 3}};
  for (int e = 0; e < 6; ++e) m.add_node(5 + e, 0.5 * (c[edges[e][0]] + c[edges[e][1]]));
  m.add_element(1, {1, 2, 3, 4, 5, 6, 7, 8, 9, 10});
  return m;
}

}  // namespace

TEST_CASE("one displacement block") {
  const FrdResult r = parse_frd(read_fixture("one_disp.frd"));
  REQUIRE(r.fields.size() == 1);
  const NodalFieldSet& f = r.fields[0];
  CHECK(f.name == "DISP");
  CHECK(f.step == 1);
  CHECK(f.values.size() == 3);
  CHECK(f.values.at(2).x() == 1.25e-3);
  CHECK(f.values.at(2).y() == -2.5e-2);
  CHECK(f.values.at(3).x() == -3.5);
  CHECK(f.values.at(3).z() == 1.0e-12);
  CHECK(r.nodes.size() == 3);
  CHECK(r.nodes.at(2).x() == 1.0);
  CHECK(r.warnings.empty());
}

TEST_CASE("blocks over two steps keep file order") {
  const FrdResult r = parse_frd(read_fixture("two_steps.frd"));
  REQUIRE(r.fields.size() == 4);
  const char* names[] = {"DISP", "FORC", "DISP", "FORC"};
  const int steps[] = {1, 1, 2, 2};
  for (int i = 0; i < 4; ++i) {
    CHECK(r.fields[i].name == names[i]);
    CHECK(r.fields[i].step == steps[i]);
    CHECK(r.fields[i].values.size() == 3);
  }
  CHECK(r.fields[3].values.at(3).z() == -5.0);
}

TEST_CASE("short ids, CRLF, element and unknown blocks") {
  const FrdResult r = parse_frd(read_fixture("mixed_short.frd"));
  REQUIRE(r.fields.size() == 1);
  CHECK(r.fields[0].name == "DISP");
  CHECK(r.fields[0].values.at(1) == Vec3(-1, -2, -3));
  CHECK(r.fields[0].values.at(2).z() == 3e-5);
  REQUIRE(r.warnings.size() == 1);
  CHECK(r.warnings[0].find("STRESS") != std::string::npos);
}

TEST_CASE("adjacent fixed-width fields without separating blanks") {
  const std::string frd =
      "    1C\n"
      "  100CL  101 1.00000E+00           1                     1    1           1\n"
      " -4  DISP        4    1\n"
      " -1         7-1.00000E+00-2.50000E-01+3.00000E+02\n"
      " -3\n"
      " 9999\n";
  const FrdResult r = parse_frd(frd);
  REQUIRE(r.fields.size() == 1);
  CHECK(r.fields[0].values.at(7) == Vec3(-1.0, -0.25, 300.0));
}

TEST_CASE("malformed fields report line and column") {
  // Second value field (columns 26-37) is corrupted.
  const std::string frd =
      "    1C\n"
      "  100CL  101 1.00000E+00           1                     1    1           1\n"
      " -4  DISP        4    1\n"
      " -1         7 1.00000E+00 2.5x000E-01 3.00000E+02\n"
      " -3\n";
  try {
    parse_frd(frd);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
    CHECK(e.column() == 26);
  }
}

TEST_CASE("truncated blocks are errors") {
  const std::string full = read_fixture("two_steps.frd");
  // Cut in the middle of the last result block.
  const std::string cut = full.substr(0, full.rfind(" -1"));
  CHECK_THROWS_AS(parse_frd(cut), ParseError);
  // Declared count larger than the records present.
  std::string short_block = read_fixture("one_disp.frd");
  const auto at = short_block.find(" -1         3-3.5");
  short_block.erase(at, short_block.find('\n', at) + 1 - at);
  CHECK_THROWS_WITH_AS(parse_frd(short_block), doctest::Contains("truncated"), ParseError);
}

TEST_CASE("parser never crashes on corrupted input") {
  const std::string base = read_fixture("two_steps.frd");
  for (std::size_t cut = 0; cut < base.size(); cut += 37) {
    std::string s = base;
    s[cut] = static_cast<char>('#' + cut % 50);
    try {
      parse_frd(s);
    } catch (const ParseError&) {
    }
  }
  for (std::size_t len = 0; len < base.size(); len += 53) {
    try {
      parse_frd(base.substr(0, len));
    } catch (const ParseError&) {
    }
  }
}

TEST_CASE("write then parse reproduces the parsed values") {
  for (const char* name : {"one_disp.frd", "two_steps.frd", "mixed_short.frd"}) {
    const FrdResult a = parse_frd(read_fixture(name));
    std::ostringstream out;
    write_frd(out, a);
    const FrdResult b = parse_frd(out.str());
    CHECK(b.nodes == a.nodes);
    REQUIRE(b.fields.size() == a.fields.size());
    for (std::size_t i = 0; i < a.fields.size(); ++i) {
      CHECK(b.fields[i].name == a.fields[i].name);
      CHECK(b.fields[i].step == a.fields[i].step);
      CHECK(b.fields[i].values == a.fields[i].values);
    }
  }
}

TEST_CASE("written records sit at their fixed byte offsets") {
  FrdResult r;
  r.fields.push_back({3, "FORC", 1.0, {{12, Vec3(1.5, -2.0, 1e-3)}}});
  std::ostringstream out;
  write_frd(out, r);
  std::istringstream in(out.str());
  std::string line;
  while (std::getline(in, line) && line.rfind(" -1", 0) != 0) {
  }
  REQUIRE(line.size() == 3 + 10 + 3 * 12);
  CHECK(line.substr(3, 10) == "        12");
  CHECK(line.substr(13, 12) == " 1.50000E+00");
  CHECK(line.substr(25, 12) == "-2.00000E+00");
  CHECK(line.substr(37, 12) == " 1.00000E-03");
}

TEST_CASE("emitted deck carries material, boundaries and mesh") {
  const Mesh m = one_tet();
  BoundaryConditions bc;
  bc.fixed_nodes = {1, 2, 3};
  bc.components.push_back({7, 2, -1.0});
  const Material mat = default_gel_material();
  const std::string deck = emit_inp(m, mat, bc);
  CHECK(deck.find("*HYPERELASTIC, NEO HOOKE\n0.0725, ") != std::string::npos);
  CHECK(deck.find("7, 3, 3, -1.0\n") != std::string::npos);
  CHECK(deck.find("1, 1, 3\n") != std::string::npos);
  CHECK(deck.find("*STEP, NLGEOM") != std::string::npos);
  CHECK(deck.find("*STATIC") != std::string::npos);
  CHECK(deck.find("*ELEMENT, TYPE=C3D10") != std::string::npos);
  const InpParseResult back = parse_inp(deck);
  REQUIRE(back.mesh.num_elements() == 1);
  CHECK(back.mesh.element_ids() == m.element_ids());
  CHECK(back.mesh.elements() == m.elements());
  CHECK(back.mesh.node_ids() == m.node_ids());
  CHECK(back.mesh.coords() == m.coords());
  CHECK(!back.warnings.empty());  // material and step blocks are outside the mesh subset

  // The D1 value round-trips exactly.
  const auto at = deck.find("NEO HOOKE\n") + 10;
  const std::string pair = deck.substr(at, deck.find('\n', at) - at);
  CHECK(std::stod(pair.substr(pair.find(',') + 1)) == mat.d1);
}

TEST_CASE("solution fields round trip through FRD text") {
  const Mesh m = one_tet();
  BoundaryConditions bc;
  bc.fixed_nodes = {1, 2, 3};
  bc.prescribed[4] = Vec3(0.0, 0.0, -0.01);
  const Solution sol = solve_static(m, default_gel_material(), bc);
  FrdResult r;
  r.fields = solution_fields(m, sol);
  std::ostringstream out;
  write_frd(out, r);
  const FrdResult back = parse_frd(out.str());
  REQUIRE(back.fields.size() == 2);
  const Solution again = solution_from_fields(m, bc, back.fields[0], &back.fields[1]);
  CHECK(again.constrained == sol.constrained);
  CHECK((again.displacement - sol.displacement).cwiseAbs().maxCoeff() < 1e-6 * 0.01);
  for (std::size_t i = 0; i < sol.reactions.size(); ++i) {
    CHECK((again.reactions[i] - sol.reactions[i]).norm() <= 1e-5 * sol.reactions[i].norm() + 1e-99);
  }
}
