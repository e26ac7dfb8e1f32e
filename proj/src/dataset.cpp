// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <numbers>
#include <set>
#include <sstream>
#include <thread>

#include <Eigen/Geometry>
#include <Eigen/LU>

#include "gelforce/error.hpp"
#include "gelforce/material.hpp"

namespace gelforce {

namespace fs = std::filesystem;

namespace {

nlohmann::json vec_json(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

Vec3 json_vec(const nlohmann::json& j) {
  const auto v = j.get<std::vector<double>>();
  if (v.size() != 3) throw FormatError("expected a 3-vector");
  return {v[0], v[1], v[2]};
}

const std::set<std::string> kSplits = {"train", "val", "test"};

}  // namespace

void to_json(nlohmann::json& j, const SampleRecord& r) {
  j = {{"id", r.id}, {"image", r.image}, {"label", r.label}, {"split", r.split}, {"indenter", r.indenter},
       {"scene", r.scene}};
  if (r.ft) j["ft"] = {{"force", vec_json(r.ft->force)}, {"torque", vec_json(r.ft->torque)}};
  if (r.total_force) j["total_force"] = vec_json(*r.total_force);
}

void from_json(const nlohmann::json& j, SampleRecord& r) {
  r = SampleRecord{};
  r.id = j.at("id").get<std::string>();
  r.image = j.at("image").get<std::string>();
  r.label = j.at("label").get<std::string>();
  r.split = j.value("split", r.split);
  r.indenter = j.value("indenter", r.indenter);
  if (j.contains("scene")) r.scene = j.at("scene").get<IndenterScene>();
  if (j.contains("ft")) r.ft = FtReading{json_vec(j.at("ft").at("force")), json_vec(j.at("ft").at("torque"))};
  if (j.contains("total_force")) r.total_force = json_vec(j.at("total_force"));
}

fs::path Manifest::resolve(const std::string& p) const {
  const fs::path path(p);
  return path.is_absolute() ? path : root / path;
}

std::vector<SampleRecord> Manifest::split(const std::string& name) const {
  std::vector<SampleRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [&](const SampleRecord& r) { return r.split == name; });
  return out;
}

Manifest load_manifest(const fs::path& path, bool strict) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest '" + path.string() + "'");
  Manifest m;
  m.root = path.parent_path();
  std::set<std::string> ids;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    SampleRecord r;
    try {
      r = nlohmann::json::parse(line).get<SampleRecord>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("malformed manifest record: ") + e.what(), no, 0);
    } catch (const Error& e) {
      throw ParseError(std::string("malformed manifest record: ") + e.what(), no, 0);
    }
    if (!kSplits.count(r.split)) throw ValidationError("line " + std::to_string(no) + ": unknown split '" + r.split + "'");
    if (!(r.scene.depth >= 0.0)) throw ValidationError("line " + std::to_string(no) + ": negative depth");
    if (!ids.insert(r.id).second) throw ValidationError("line " + std::to_string(no) + ": duplicate id '" + r.id + "'");
    for (const std::string* p : {&r.image, &r.label}) {
      const fs::path full = m.resolve(*p);
      if (!fs::exists(full)) {
        throw FormatError("line " + std::to_string(no) + ": referenced file '" + full.string() + "' does not exist");
      }
    }
    if (strict && r.total_force) {
      const ForceGrid g = load_label(m.resolve(r.label).string());
      const Vec3 sum = g.total();
      // FGRD stores f32 cells; allow their rounding.
      const double tol = 1e-6 * (g.data().abs().sum() + r.total_force->cwiseAbs().sum()) + 1e-9;
      nlohmann::json side;
      load_label(m.resolve(r.label).string(), &side);
      Vec3 dropped = Vec3::Zero();
      if (side.contains("dropped")) dropped = json_vec(side.at("dropped"));
      if ((sum + dropped - *r.total_force).cwiseAbs().maxCoeff() > tol) {
        throw ValidationError("line " + std::to_string(no) + ": label '" + r.label +
                              "' does not sum to the recorded total force");
      }
    }
    m.records.push_back(std::move(r));
  }
  return m;
}

void write_manifest(const fs::path& path, const std::vector<SampleRecord>& records) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot open '" + path.string() + "' for writing");
  for (const auto& r : records) out << nlohmann::json(r).dump() << "\n";
  if (!out) throw FormatError("failed writing '" + path.string() + "'");
}

std::vector<nn::TrainingSample> load_samples(const Manifest& m, const std::vector<SampleRecord>& records) {
  std::vector<nn::TrainingSample> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    nn::TrainingSample s;
    s.id = r.id;
    s.image = read_image(m.resolve(r.image).string());
    s.label = load_label(m.resolve(r.label).string());
    s.label.sample_id = r.id;
    out.push_back(std::move(s));
  }
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::kSphere: return "sphere";
    case ShapeFamily::kCuboid: return "cuboid";
    case ShapeFamily::kCylinder: return "cylinder";
    case ShapeFamily::kCone: return "cone";
    case ShapeFamily::kSlopingCuboid: return "sloping_cuboid";
  }
  return "unknown";
}

int training_variants(ShapeFamily f) {
  switch (f) {
    case ShapeFamily::kSphere:
    case ShapeFamily::kCuboid: return 3;
    default: return 2;
  }
}

BuiltinShape builtin_shape(const ShapeChoice& c) {
  const bool held_out = c.variant < 0;
  if (!held_out && c.variant >= training_variants(c.family)) throw ValidationError("unknown shape variant");
  auto pick = [&](std::initializer_list<double> train, double test) {
    return held_out ? test : *(train.begin() + c.variant);
  };
  std::ostringstream tag;
  tag << std::setprecision(4);
  BuiltinShape s;
  switch (c.family) {
    case ShapeFamily::kSphere: {
      const double r = pick({4.0, 6.0, 7.5}, 5.0);
      s.indenter = Indenter::sphere(r);
      tag << "sphere_r" << r;
      break;
    }
    case ShapeFamily::kCuboid: {
      const double sx = pick({6.0, 4.0, 8.0}, 5.0), sy = pick({6.0, 8.0, 3.0}, 5.0);
      s.indenter = Indenter::cuboid(Vec3(sx, sy, 10.0));
      tag << "cuboid_" << sx << "x" << sy;
      break;
    }
    case ShapeFamily::kCylinder: {
      const double r = pick({2.5, 4.0}, 3.25);
      s.indenter = Indenter::cylinder(r, 10.0);
      tag << "cylinder_r" << r;
      break;
    }
    case ShapeFamily::kCone: {
      const double deg = pick({60.0, 70.0}, 65.0);
      s.indenter = Indenter::cone(deg * std::numbers::pi / 180.0, 10.0);
      tag << "cone_" << deg << "deg";
      break;
    }
    case ShapeFamily::kSlopingCuboid: {
      const double deg = pick({10.0, 20.0}, 15.0);
      s.indenter = Indenter::cuboid(Vec3(8.0, 6.0, 10.0));
      s.rotation = rotation_from_degrees(Vec3(0.0, deg, 0.0));
      tag << "sloping_cuboid_" << deg << "deg";
      break;
    }
  }
  s.tag = tag.str();
  return s;
}

ProjectionMatrix gel_projection(const BoxSpec& box, int image_width, int image_height) {
  const double px_per_mm = std::min(image_width / box.dimensions.x(), image_height / box.dimensions.y());
  return scaled_projection(px_per_mm, Eigen::Vector2d(image_width / 2.0, image_height / 2.0));
}

namespace {

// Displacement field of the top surface sampled at pixel centres.
struct SurfaceField {
  int width = 0, height = 0;
  std::vector<Vec3> u;  // row-major
  const Vec3& at(int y, int x) const { return u[static_cast<std::size_t>(y) * width + x]; }
};

SurfaceField rasterize_surface(const Mesh& mesh, const Solution& sol, const ProjectionMatrix& p, int width,
                               int height) {
  SurfaceField f{width, height, std::vector<Vec3>(static_cast<std::size_t>(width) * height, Vec3::Zero())};
  // Pixel <-> top-plane map: pixel = A xy + b.
  const Eigen::Matrix<double, 2, 4> m = p.affine_block();
  const Eigen::Matrix2d a = m.leftCols<2>();
  const Eigen::Matrix2d inv = a.inverse();
  const Eigen::Vector2d b = m.col(3);
  for (const SurfaceFace& face : mesh.surface("CONTACT")) {
    const auto nodes = mesh.face_nodes(face);
    Eigen::Vector2d c[3];
    for (int k = 0; k < 3; ++k) c[k] = mesh.node(nodes[k]).head<2>();
    Eigen::Vector2d lo = a * c[0] + b, hi = lo;
    for (int k = 1; k < 3; ++k) {
      const Eigen::Vector2d q = a * c[k] + b;
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    Eigen::Matrix2d t;
    t << c[1] - c[0], c[2] - c[0];
    const Eigen::Matrix2d tinv = t.inverse();
    const int x0 = std::max(0, static_cast<int>(std::floor(lo.x() - 0.5)));
    const int x1 = std::min(width - 1, static_cast<int>(std::ceil(hi.x() - 0.5)));
    const int y0 = std::max(0, static_cast<int>(std::floor(lo.y() - 0.5)));
    const int y1 = std::min(height - 1, static_cast<int>(std::ceil(hi.y() - 0.5)));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const Eigen::Vector2d world = inv * (Eigen::Vector2d(x + 0.5, y + 0.5) - b);
        const Eigen::Vector2d l = tinv * (world - c[0]);
        const double l1 = l.x(), l2 = l.y(), l0 = 1.0 - l1 - l2;
        if (l0 < -1e-9 || l1 < -1e-9 || l2 < -1e-9) continue;
        // Quadratic triangle: corners 0..2, mid-edges 3 (0-1), 4 (1-2), 5 (2-0).
        const double n[6] = {l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1),
                             4 * l0 * l1,       4 * l1 * l2,       4 * l2 * l0};
        Vec3 u = Vec3::Zero();
        for (int k = 0; k < 6; ++k) u += n[k] * sol.displacement.col(nodes[k]);
        f.u[static_cast<std::size_t>(y) * width + x] = u;
      }
    }
  }
  return f;
}

}  // namespace

Image render_proxy_image(const Mesh& mesh, const Solution* sol, const ProjectionMatrix& p, int width, int height) {
  SurfaceField field{width, height, std::vector<Vec3>(static_cast<std::size_t>(width) * height, Vec3::Zero())};
  if (sol) field = rasterize_surface(mesh, *sol, p, width, height);
  const Eigen::Matrix<double, 2, 4> m = p.affine_block();
  const double px_per_mm = std::sqrt(std::abs(m.leftCols<2>().determinant()));
  const double mm_per_px = 1.0 / px_per_mm;

  // Three coloured lights 120 degrees apart at 45 degrees elevation.
  const double s = std::sqrt(0.5);
  Vec3 light[3];
  for (int c = 0; c < 3; ++c) {
    const double az = 2.0 * std::numbers::pi * c / 3.0;
    light[c] = Vec3(s * std::cos(az), s * std::sin(az), s);
  }
  const double base[3] = {0.46, 0.50, 0.56};
  Image img(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int xl = std::max(x - 1, 0), xr = std::min(x + 1, width - 1);
      const int yu = std::max(y - 1, 0), yd = std::min(y + 1, height - 1);
      const double hx = (field.at(y, xr).z() - field.at(y, xl).z()) / (std::max(xr - xl, 1) * mm_per_px);
      const double hy = (field.at(yd, x).z() - field.at(yu, x).z()) / (std::max(yd - yu, 1) * mm_per_px);
      const Vec3 n = Vec3(-hx, -hy, 1.0).normalized();
      const double depth = field.at(y, x).z();
      for (int c = 0; c < 3; ++c) {
        const double shade = 1.6 * (n.dot(light[c]) - s);
        img.at(y, x, c) = static_cast<float>(std::clamp(base[c] + shade + 0.05 * depth, 0.0, 1.0));
      }
    }
  }

  // Marker dots on a 2 mm grid follow the in-plane displacement.
  const double pitch = 2.0, radius_px = 0.35 * px_per_mm;
  const Eigen::Matrix2d a = m.leftCols<2>();
  const Eigen::Vector2d b = m.col(3);
  const Eigen::Matrix2d inv = a.inverse();
  const Eigen::Vector2d w0 = inv * (Eigen::Vector2d(0.0, 0.0) - b), w1 = inv * (Eigen::Vector2d(width, height) - b);
  const Eigen::Vector2d wlo = w0.cwiseMin(w1), whi = w0.cwiseMax(w1);
  for (double my = std::ceil(wlo.y() / pitch - 0.5) + 0.5; my * pitch < whi.y(); my += 1.0) {
    for (double mx = std::ceil(wlo.x() / pitch - 0.5) + 0.5; mx * pitch < whi.x(); mx += 1.0) {
      const Eigen::Vector2d rest = a * Eigen::Vector2d(mx * pitch, my * pitch) + b;
      const int sx = std::clamp(static_cast<int>(rest.x()), 0, width - 1);
      const int sy = std::clamp(static_cast<int>(rest.y()), 0, height - 1);
      const Eigen::Vector2d c = rest + a * field.at(sy, sx).head<2>();
      const int x0 = std::max(0, static_cast<int>(c.x() - radius_px - 2));
      const int x1 = std::min(width - 1, static_cast<int>(c.x() + radius_px + 2));
      const int y0 = std::max(0, static_cast<int>(c.y() - radius_px - 2));
      const int y1 = std::min(height - 1, static_cast<int>(c.y() + radius_px + 2));
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const double d = (Eigen::Vector2d(x + 0.5, y + 0.5) - c).norm();
          const double cover = std::clamp(radius_px + 0.5 - d, 0.0, 1.0);
          if (cover <= 0.0) continue;
          for (int k = 0; k < 3; ++k) img.at(y, x, k) *= static_cast<float>(1.0 - 0.8 * cover);
        }
      }
    }
  }
  return img;
}

namespace {

struct SampleResult {
  SampleRecord record;
  Image image;
  ForceGrid label;
  Vec3 dropped = Vec3::Zero();
  int rejected = 0;
  int failed = 0;
  std::vector<std::string> log;
  bool ok = false;
};

std::string sample_id(int i) {
  std::ostringstream s;
  s << "s" << std::setw(5) << std::setfill('0') << i;
  return s.str();
}

SampleResult make_sample(const Mesh& mesh, const SynthOptions& o, const ProjectionMatrix& proj, int index,
                         const std::string& split) {
  SampleResult res;
  const std::string id = sample_id(index);
  std::seed_seq seq{static_cast<std::uint32_t>(o.seed), static_cast<std::uint32_t>(o.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  auto uni = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  ShapeChoice choice;
  choice.family = static_cast<ShapeFamily>(index % 5);
  choice.variant = split == "test"
                       ? -1
                       : std::uniform_int_distribution<int>(0, training_variants(choice.family) - 1)(rng);
  const BuiltinShape shape = builtin_shape(choice);

  LabelOptions lopts;
  lopts.resolution = o.resolution;
  lopts.image_size = Eigen::Vector2d(o.image_width, o.image_height);

  for (int attempt = 0; attempt < o.max_attempts; ++attempt) {
    IndenterScene scene;
    scene.indenter = shape.indenter;
    scene.rotation = shape.rotation;
    scene.depth = o.fixed_depth ? *o.fixed_depth : uni(o.ranges.depth_min, o.ranges.depth_max);
    scene.position = Eigen::Vector2d(uni(-o.ranges.position_x, o.ranges.position_x),
                                     uni(-o.ranges.position_y, o.ranges.position_y));
    scene.offset = Eigen::Vector2d(uni(-o.ranges.offset, o.ranges.offset), uni(-o.ranges.offset, o.ranges.offset));

    SampleRecord rec;
    rec.id = id;
    rec.split = split;
    rec.indenter = shape.tag;
    rec.scene = scene;
    rec.image = "images/" + id + ".png";
    rec.label = "labels/" + id + ".fgrd";

    if (scene.depth <= 0.0) {
      rec.scene.offset.setZero();
      rec.ft = FtReading{};
      rec.total_force = Vec3::Zero();
      res.record = rec;
      res.label = ForceGrid(o.resolution.width, o.resolution.height);
      res.image = render_proxy_image(mesh, nullptr, proj, o.image_width, o.image_height);
      res.ok = true;
      return res;
    }

    BoundaryConditions bc;
    Solution sol;
    try {
      bc = tie_contact(mesh, scene);
      sol = solve_static(mesh, default_gel_material(), bc, o.solver);
    } catch (const ValidationError& e) {
      ++res.rejected;
      res.log.push_back(id + " attempt " + std::to_string(attempt) + ": " + e.what());
      continue;
    } catch (const SolverError& e) {
      ++res.failed;
      res.log.push_back(id + " attempt " + std::to_string(attempt) + ": FEA did not converge: " + e.what());
      continue;
    }
    BinResult bin = make_label(mesh, sol, proj, lopts);
    const Vec3 total = bin.grid.total() + bin.dropped;
    if (!(total.z() > 0.0 && total.z() <= o.ranges.max_normal) || std::abs(total.x()) > o.ranges.max_shear ||
        std::abs(total.y()) > o.ranges.max_shear) {
      ++res.rejected;
      std::ostringstream msg;
      msg << id << " attempt " << attempt << ": force (" << total.x() << ", " << total.y() << ", " << total.z()
          << ") N outside the accepted band";
      res.log.push_back(msg.str());
      continue;
    }
    // Indenter-side F/T reading about the contact origin on the surface.
    FtReading ft;
    const Vec3 origin(scene.position.x(), scene.position.y(), 0.0);
    for (const auto& [nid, u] : bc.prescribed) {
      const int n = mesh.node_index(nid);
      const Vec3 f = -sol.reaction(n);
      ft.force += f;
      ft.torque += (mesh.node(n) + sol.displacement.col(n) - origin).cross(f);
    }
    rec.ft = ft;
    rec.total_force = total;
    res.record = rec;
    res.label = std::move(bin.grid);
    res.dropped = bin.dropped;
    res.image = render_proxy_image(mesh, &sol, proj, o.image_width, o.image_height);
    for (auto& w : bin.warnings) res.log.push_back(id + ": " + w);
    res.ok = true;
    return res;
  }
  res.log.push_back(id + ": skipped after " + std::to_string(o.max_attempts) + " attempts");
  return res;
}

}  // namespace

SynthReport synth_dataset(const fs::path& out_dir, const SynthOptions& o) {
  if (o.count < 1) throw ValidationError("synthetic dataset needs at least one sample");
  if (o.threads < 1) throw ValidationError("threads must be at least 1");
  if (!(o.val_fraction >= 0.0 && o.test_fraction >= 0.0 && o.val_fraction + o.test_fraction < 1.0)) {
    throw ValidationError("split fractions must be non-negative and sum below 1");
  }
  const Mesh mesh = meshgen_box(o.mesh);
  const ProjectionMatrix proj = gel_projection(o.mesh, o.image_width, o.image_height);

  // Split assignment: a seeded permutation, test first, then validation.
  std::vector<std::string> split(o.count, "train");
  {
    std::vector<int> order(o.count);
    for (int i = 0; i < o.count; ++i) order[i] = i;
    std::mt19937_64 rng(o.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const int n_test = static_cast<int>(std::lround(o.count * o.test_fraction));
    const int n_val = static_cast<int>(std::lround((o.count - n_test) * o.val_fraction));
    for (int k = 0; k < n_test; ++k) split[order[k]] = "test";
    for (int k = n_test; k < n_test + n_val; ++k) split[order[k]] = "val";
  }

  std::vector<SampleResult> results(o.count);
  const int workers = std::min(o.threads, o.count);
  auto run = [&](int w) {
    for (int i = w; i < o.count; i += workers) results[i] = make_sample(mesh, o, proj, i, split[i]);
  };
  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(run, w);
    for (auto& t : pool) t.join();
  }

  fs::create_directories(out_dir / "images");
  fs::create_directories(out_dir / "labels");
  SynthReport rep;
  for (auto& r : results) {
    rep.rejected += r.rejected;
    rep.failed += r.failed;
    rep.log.insert(rep.log.end(), r.log.begin(), r.log.end());
    if (!r.ok) continue;
    write_png((out_dir / r.record.image).string(), r.image);
    r.label.sample_id = r.record.id;
    save_label((out_dir / r.record.label).string(), r.label,
               {{"dropped", {r.dropped.x(), r.dropped.y(), r.dropped.z()}}, {"indenter", r.record.indenter}});
    rep.records.push_back(r.record);
  }
  write_manifest(out_dir / "manifest.jsonl", rep.records);
  return rep;
}

}  // namespace gelforce
