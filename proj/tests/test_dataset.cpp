// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "gelforce/dataset.hpp"
#include "gelforce/error.hpp"

namespace fs = std::filesystem;
using namespace gelforce;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gelforce_test_dataset_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

SynthOptions small_options() {
  SynthOptions o;
  o.count = 5;
  o.seed = 11;
  o.mesh = BoxSpec{{32.0, 24.0, 5.0}, {8, 6, 2}, 2.0};
  o.image_width = 64;
  o.image_height = 48;
  o.resolution = Resolution{6, 8};
  o.val_fraction = 0.25;
  o.test_fraction = 0.2;
  o.solver.increments = 2;
  return o;
}

}  // namespace

TEST_CASE("manifest: empty file gives no records") {
  const fs::path dir = scratch("empty");
  write_text(dir / "manifest.jsonl", "");
  const Manifest m = load_manifest(dir / "manifest.jsonl");
  CHECK(m.records.empty());
  CHECK(m.root == dir);
}

TEST_CASE("manifest: three-line fixture round trip and errors") {
  const fs::path dir = scratch("fixture");
  fs::create_directories(dir / "labels");
  Image img(4, 3, 0.5f);
  std::vector<SampleRecord> recs;
  for (int i = 0; i < 3; ++i) {
    SampleRecord r;
    r.id = "r" + std::to_string(i);
    r.image = "im" + std::to_string(i) + ".ppm";
    r.label = "labels/l" + std::to_string(i) + ".fgrd";
    r.split = i == 2 ? "val" : "train";
    r.indenter = "sphere_r4";
    r.scene.depth = 0.5 * i;
    r.scene.position = Eigen::Vector2d(1.0, -2.0);
    ForceGrid g(2, 2);
    g(0, 0, 2) = 1.0 + i;
    r.total_force = g.total();
    r.ft = FtReading{Vec3(0, 0, 1.0 + i), Vec3(0.5, 0, 0)};
    write_ppm((dir / r.image).string(), img);
    save_label((dir / r.label).string(), g);
    recs.push_back(r);
  }
  write_manifest(dir / "manifest.jsonl", recs);

  const Manifest m = load_manifest(dir / "manifest.jsonl", true);
  REQUIRE(m.records.size() == 3);
  CHECK(m.records[1].id == "r1");
  CHECK(m.records[2].split == "val");
  CHECK(m.records[1].scene.depth == doctest::Approx(0.5));
  CHECK(m.records[2].ft->force.z() == doctest::Approx(3.0));
  CHECK(m.split("train").size() == 2);
  const auto samples = load_samples(m, m.split("val"));
  REQUIRE(samples.size() == 1);
  CHECK(samples[0].id == "r2");
  CHECK(samples[0].label.total().z() == doctest::Approx(3.0));

  SUBCASE("missing label names the path") {
    fs::remove(dir / "labels/l1.fgrd");
    try {
      load_manifest(dir / "manifest.jsonl");
      FAIL("expected an error");
    } catch (const FormatError& e) {
      CHECK(std::string(e.what()).find("l1.fgrd") != std::string::npos);
    }
  }
  SUBCASE("malformed line reports its number") {
    std::string text = slurp(dir / "manifest.jsonl");
    text += "{not json\n";
    write_text(dir / "manifest.jsonl", text);
    try {
      load_manifest(dir / "manifest.jsonl");
      FAIL("expected an error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find('4') != std::string::npos);
    }
  }
  SUBCASE("duplicate ids and unknown splits") {
    auto dup = recs;
    dup[2].id = "r0";
    write_manifest(dir / "manifest.jsonl", dup);
    CHECK_THROWS_AS(load_manifest(dir / "manifest.jsonl"), ValidationError);
    auto bad = recs;
    bad[0].split = "holdout";
    write_manifest(dir / "manifest.jsonl", bad);
    CHECK_THROWS_AS(load_manifest(dir / "manifest.jsonl"), ValidationError);
  }
  SUBCASE("strict mode catches a wrong total") {
    auto wrong = recs;
    wrong[1].total_force = Vec3(0, 0, 7.0);
    write_manifest(dir / "manifest.jsonl", wrong);
    CHECK_NOTHROW(load_manifest(dir / "manifest.jsonl"));
    CHECK_THROWS_AS(load_manifest(dir / "manifest.jsonl", true), ValidationError);
  }
}

TEST_CASE("builtin shapes: held-out geometry differs from every training variant") {
  for (int f = 0; f < 5; ++f) {
    const auto family = static_cast<ShapeFamily>(f);
    const std::string test_tag = builtin_shape({family, -1}).tag;
    CHECK(test_tag.rfind(to_string(family), 0) == 0);
    for (int v = 0; v < training_variants(family); ++v) CHECK(builtin_shape({family, v}).tag != test_tag);
    CHECK_THROWS_AS(builtin_shape({family, training_variants(family)}), ValidationError);
  }
}

TEST_CASE("proxy image: reference frame is flat apart from markers") {
  const BoxSpec box{{32.0, 24.0, 5.0}, {8, 6, 2}, 2.0};
  const Mesh mesh = meshgen_box(box);
  const Image img = render_proxy_image(mesh, nullptr, gel_projection(box, 64, 48), 64, 48);
  REQUIRE(img.width == 64);
  // Background colour dominates and markers only darken.
  int background = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      CHECK(img.at(y, x, 0) <= 0.46f + 1e-6f);
      background += std::abs(img.at(y, x, 2) - 0.56f) < 1e-6f;
    }
  CHECK(background > 64 * 48 / 2);
  CHECK(background < 64 * 48);
}

TEST_CASE("synth: deterministic, force band respected, thread independent") {
  const fs::path a = scratch("synth_a"), b = scratch("synth_b");
  SynthOptions o = small_options();
  const SynthReport ra = synth_dataset(a, o);
  o.threads = 3;
  const SynthReport rb = synth_dataset(b, o);
  REQUIRE(ra.records.size() == 5);
  REQUIRE(rb.records.size() == 5);
  CHECK(slurp(a / "manifest.jsonl") == slurp(b / "manifest.jsonl"));
  int tests = 0, vals = 0;
  for (const auto& r : ra.records) {
    CHECK(slurp(a / r.image) == slurp(b / r.image));
    CHECK(slurp(a / r.label) == slurp(b / r.label));
    REQUIRE(r.total_force.has_value());
    CHECK(r.total_force->z() > 0.0);
    CHECK(r.total_force->z() <= o.ranges.max_normal);
    CHECK(std::abs(r.total_force->x()) <= o.ranges.max_shear);
    CHECK(std::abs(r.total_force->y()) <= o.ranges.max_shear);
    // The indenter-side reading balances the gel-side total.
    CHECK((r.ft->force - *r.total_force).norm() < 1e-6 * (1.0 + r.total_force->norm()));
    tests += r.split == "test";
    vals += r.split == "val";
  }
  CHECK(tests == 1);
  CHECK(vals == 1);
  // Held-out shapes only in the test split.
  for (const auto& r : ra.records) {
    for (int f = 0; f < 5; ++f) {
      const bool held_out_tag = r.indenter == builtin_shape({static_cast<ShapeFamily>(f), -1}).tag;
      if (held_out_tag) CHECK(r.split == "test");
    }
  }
  const Manifest m = load_manifest(a / "manifest.jsonl", true);
  CHECK(m.records.size() == 5);
}

TEST_CASE("synth: zero depth gives zero labels and the reference image") {
  const fs::path dir = scratch("synth_zero");
  SynthOptions o = small_options();
  o.count = 2;
  o.fixed_depth = 0.0;
  const SynthReport r = synth_dataset(dir, o);
  REQUIRE(r.records.size() == 2);
  const BoxSpec box = o.mesh;
  const Image ref = render_proxy_image(meshgen_box(box), nullptr, gel_projection(box, 64, 48), 64, 48);
  for (const auto& rec : r.records) {
    const ForceGrid g = load_label((dir / rec.label).string());
    CHECK(g.data().abs().maxCoeff() == 0.0);
    const Image img = read_png((dir / rec.image).string());
    double worst = 0.0;
    for (std::size_t k = 0; k < img.rgb.size(); ++k) worst = std::max(worst, double(std::abs(img.rgb[k] - ref.rgb[k])));
    CHECK(worst <= 0.5 / 255.0 + 1e-6);
  }
}

TEST_CASE("synth: bad options") {
  SynthOptions o = small_options();
  o.count = 0;
  CHECK_THROWS_AS(synth_dataset(scratch("bad"), o), ValidationError);
  o = small_options();
  o.val_fraction = 0.6;
  o.test_fraction = 0.5;
  CHECK_THROWS_AS(synth_dataset(scratch("bad"), o), ValidationError);
}
