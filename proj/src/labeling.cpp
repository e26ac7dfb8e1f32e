// Copyright 2026 The gelforce Authors
// SPDX-License-Identifier: Apache-2.0

#include "gelforce/labeling.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <Eigen/Geometry>

#include "binary_io.hpp"
#include "gelforce/error.hpp"

namespace gelforce {

namespace {

using Point = Eigen::Vector2d;
using Polygon = std::vector<Point>;

constexpr char kMagic[4] = {'F', 'G', 'R', 'D'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::ostream& out, T v) {
  binio::put_le(out, v);
}

template <typename T>
T get_le(std::istream& in, const char* what) {
  return binio::get_le<T>(in, "FGRD", what);
}

Polygon clip(const Polygon& in, int axis, double bound, double s) {
  Polygon out;
  if (in.empty()) return out;
  out.reserve(in.size() + 2);
  auto inside = [&](const Point& p) { return s * p(axis) <= s * bound; };
  Point prev = in.back();
  bool prev_in = inside(prev);
  for (const Point& cur : in) {
    const bool cur_in = inside(cur);
    if (cur_in != prev_in) {
      const double t = (bound - prev(axis)) / (cur(axis) - prev(axis));
      Point x = prev + t * (cur - prev);
      x(axis) = bound;
      out.push_back(x);
    }
    if (cur_in) out.push_back(cur);
    prev = cur;
    prev_in = cur_in;
  }
  return out;
}

double signed_area(const Polygon& p) {
  double a = 0.0;
  for (std::size_t i = 0, j = p.size() - 1; i < p.size(); j = i++) a += p[j].x() * p[i].y() - p[i].x() * p[j].y();
  return 0.5 * a;
}

double triangle_area(const Vec3& a, const Vec3& b, const Vec3& c) { return 0.5 * (b - a).cross(c - a).norm(); }

}  // namespace

void NormalizationConstants::check() const {
  if (!(std::isfinite(shear) && shear > 0.0 && std::isfinite(normal) && normal > 0.0)) {
    throw ValidationError("normalization scales must be finite and positive");
  }
}

ForceGrid::ForceGrid(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw ValidationError("force grid needs at least one bin in each direction");
  data_ = Data::Zero(static_cast<Eigen::Index>(width) * height, 3);
}

ForceGrid ForceGrid::block_sum(int factor_y, int factor_x) const {
  if (factor_y < 1 || factor_x < 1 || height_ % factor_y != 0 || width_ % factor_x != 0) {
    throw ShapeError("block factors " + std::to_string(factor_y) + "x" + std::to_string(factor_x) +
                     " do not divide grid " + std::to_string(height_) + "x" + std::to_string(width_));
  }
  ForceGrid out(width_ / factor_x, height_ / factor_y);
  for (int r = 0; r < height_; ++r) {
    for (int c = 0; c < width_; ++c) {
      out.data_.row((r / factor_y) * out.width_ + c / factor_x) += data_.row(r * width_ + c);
    }
  }
  out.sample_id = sample_id;
  out.normalized = normalized;
  out.constants = constants;
  return out;
}

void ForceGrid::check(double tolerance) const {
  if (!data_.allFinite()) throw ValidationError("force grid has non-finite entries");
  if (!normalized && data_.rows() > 0 && data_.col(2).minCoeff() < -tolerance) {
    throw ValidationError("raw force grid has negative normal force");
  }
}

ForceGrid normalize(const ForceGrid& g, const NormalizationConstants& c) {
  c.check();
  if (g.normalized) throw ValidationError("grid is already normalized");
  ForceGrid out = g;
  out.data().leftCols<2>() /= c.shear;
  out.data().col(2) /= c.normal;
  out.normalized = true;
  out.constants = c;
  return out;
}

ForceGrid denormalize(const ForceGrid& g, const NormalizationConstants& c) {
  c.check();
  ForceGrid out = g;
  out.data().leftCols<2>() *= c.shear;
  out.data().col(2) *= c.normal;
  out.normalized = false;
  out.constants = c;
  return out;
}

Resolution parse_resolution(const std::string& s) {
  const auto x = s.find_first_of("xX");
  Resolution r;
  try {
    std::size_t a = 0, b = 0;
    if (x == std::string::npos) throw std::invalid_argument("no separator");
    r.height = std::stoi(s.substr(0, x), &a);
    r.width = std::stoi(s.substr(x + 1), &b);
    if (a != x || b != s.size() - x - 1) throw std::invalid_argument("trailing text");
  } catch (const std::exception&) {
    throw ValidationError("resolution '" + s + "' must look like HxW, e.g. 24x32");
  }
  if (r.height < 1 || r.width < 1 || r.height > 65535 || r.width > 65535) {
    throw ValidationError("resolution '" + s + "' out of range");
  }
  return r;
}

std::string to_string(const Resolution& r) { return std::to_string(r.height) + "x" + std::to_string(r.width); }

double polygon_area(const Polygon& polygon) { return polygon.size() < 3 ? 0.0 : std::abs(signed_area(polygon)); }

double clipped_area(const Polygon& polygon, const Point& lo, const Point& hi) {
  Polygon p = clip(polygon, 0, lo.x(), -1.0);
  p = clip(p, 0, hi.x(), 1.0);
  p = clip(p, 1, lo.y(), -1.0);
  p = clip(p, 1, hi.y(), 1.0);
  return polygon_area(p);
}

std::vector<ProjectedFace> project_faces(const Mesh& mesh, const std::vector<SurfaceFace>& faces,
                                         const std::vector<Vec3>& forces, const ProjectionMatrix& p, bool subdivide) {
  if (faces.size() != forces.size()) throw ShapeError("one force per face required");
  // Sub-triangles over face nodes (corners 0..2, mid-edge 3: 0-1, 4: 1-2, 5: 2-0).
  static constexpr std::array<std::array<int, 3>, 4> kSub = {{{0, 3, 5}, {3, 1, 4}, {5, 4, 2}, {3, 4, 5}}};
  std::vector<ProjectedFace> out;
  out.reserve(faces.size() * (subdivide ? 4 : 1));
  for (std::size_t f = 0; f < faces.size(); ++f) {
    const auto nodes = mesh.face_nodes(faces[f]);
    std::array<Point, 6> px;
    for (int k = 0; k < 6; ++k) px[k] = project(p, mesh.node(nodes[k]));
    if (!subdivide) {
      out.push_back({{px[0], px[1], px[2]}, forces[f]});
      continue;
    }
    std::array<double, 4> area;
    double total = 0.0;
    for (int s = 0; s < 4; ++s) {
      area[s] = triangle_area(mesh.node(nodes[kSub[s][0]]), mesh.node(nodes[kSub[s][1]]), mesh.node(nodes[kSub[s][2]]));
      total += area[s];
    }
    Vec3 rest = forces[f];
    for (int s = 0; s < 4; ++s) {
      // The last share takes the remainder so the split sums exactly.
      const Vec3 share = s < 3 ? Vec3(forces[f] * (total > 0.0 ? area[s] / total : 0.25)) : rest;
      rest -= share;
      out.push_back({{px[kSub[s][0]], px[kSub[s][1]], px[kSub[s][2]]}, share});
    }
  }
  return out;
}

BinResult bin_forces(const std::vector<ProjectedFace>& faces, int width, int height, const Eigen::Vector2d& image_size) {
  if (!(image_size.x() > 0.0 && image_size.y() > 0.0)) throw ValidationError("image size must be positive");
  BinResult res{ForceGrid(width, height), Vec3::Zero(), {}};
  const double bw = image_size.x() / width, bh = image_size.y() / height;
  for (std::size_t i = 0; i < faces.size(); ++i) {
    const ProjectedFace& f = faces[i];
    const double area = polygon_area(f.polygon);
    if (!(area > 0.0) || !std::isfinite(area)) {
      if (f.force.squaredNorm() > 0.0) {
        res.warnings.push_back("polygon " + std::to_string(i) + " has zero area; its force is skipped");
        res.dropped += f.force;
      }
      continue;
    }
    Point lo = f.polygon[0], hi = f.polygon[0];
    for (const Point& q : f.polygon) {
      lo = lo.cwiseMin(q);
      hi = hi.cwiseMax(q);
    }
    const int c0 = std::max(0, static_cast<int>(std::floor(lo.x() / bw)));
    const int c1 = std::min(width - 1, static_cast<int>(std::floor(hi.x() / bw)));
    const int r0 = std::max(0, static_cast<int>(std::floor(lo.y() / bh)));
    const int r1 = std::min(height - 1, static_cast<int>(std::floor(hi.y() / bh)));
    double inside = 0.0;
    for (int r = r0; r <= r1; ++r) {
      for (int c = c0; c <= c1; ++c) {
        const double a = clipped_area(f.polygon, Point(c * bw, r * bh), Point((c + 1) * bw, (r + 1) * bh));
        if (a <= 0.0) continue;
        const double frac = a / area;
        inside += frac;
        res.grid.data().row(r * width + c) += (frac * f.force).transpose().array();
      }
    }
    res.dropped += (1.0 - inside) * f.force;
  }
  return res;
}

namespace {

std::vector<Vec3> label_face_forces(const Mesh& mesh, const Solution& sol, const std::string& surface) {
  std::vector<Vec3> forces = surface_element_forces(mesh, sol, surface);
  for (Vec3& f : forces) f = -f;
  return forces;
}

BinResult label_from_forces(const Mesh& mesh, const std::vector<Vec3>& forces, const ProjectionMatrix& p,
                            const LabelOptions& opts) {
  const auto& faces = mesh.surface(opts.surface);
  BinResult r = bin_forces(project_faces(mesh, faces, forces, p, opts.subdivide), opts.resolution.width,
                           opts.resolution.height, opts.image_size);
  return r;
}

}  // namespace

BinResult make_label(const Mesh& mesh, const Solution& sol, const ProjectionMatrix& p, const LabelOptions& opts) {
  return label_from_forces(mesh, label_face_forces(mesh, sol, opts.surface), p, opts);
}

BinResult make_label(const Mesh& mesh, const std::map<int, Vec3>& reactions, const ProjectionMatrix& p,
                     const LabelOptions& opts) {
  Solution sol;
  sol.displacement = Eigen::Matrix3Xd::Zero(3, mesh.num_nodes());
  std::vector<std::pair<int, Vec3>> rf;
  for (const auto& [id, f] : reactions) rf.emplace_back(mesh.node_index(id), f);
  std::sort(rf.begin(), rf.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
  for (const auto& [n, f] : rf) {
    sol.constrained.push_back(n);
    sol.reactions.push_back(f);
  }
  return make_label(mesh, sol, p, opts);
}

void write_fgrd(std::ostream& out, const ForceGrid& g) {
  if (g.width() < 1 || g.height() < 1 || g.width() > 65535 || g.height() > 65535) {
    throw ValidationError("grid dimensions do not fit the FGRD header");
  }
  out.write(kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(g.width()));
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(g.height()));
  put_le<std::uint16_t>(out, 3);
  for (Eigen::Index i = 0; i < g.data().rows(); ++i) {
    for (int c = 0; c < 3; ++c) put_le<float>(out, static_cast<float>(g.data()(i, c)));
  }
  if (!out) throw FormatError("failed writing FGRD data");
}

ForceGrid read_fgrd(std::istream& in) {
  char magic[4];
  if (!in.read(magic, 4)) throw FormatError("FGRD truncated in magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw FormatError("not an FGRD file (bad magic)");
  const auto version = get_le<std::uint16_t>(in, "version");
  if (version != kVersion) throw FormatError("unsupported FGRD version " + std::to_string(version));
  const int w = get_le<std::uint16_t>(in, "header");
  const int h = get_le<std::uint16_t>(in, "header");
  const int c = get_le<std::uint16_t>(in, "header");
  if (c != 3) throw FormatError("FGRD must have 3 channels, found " + std::to_string(c));
  if (w < 1 || h < 1) throw FormatError("FGRD has an empty grid");
  ForceGrid g(w, h);
  for (Eigen::Index i = 0; i < g.data().rows(); ++i) {
    for (int k = 0; k < 3; ++k) g.data()(i, k) = get_le<float>(in, "data");
  }
  return g;
}

nlohmann::json sidecar_json(const ForceGrid& g) {
  nlohmann::json j = {{"format", "FGRD"},          {"version", kVersion}, {"width", g.width()},
                      {"height", g.height()},      {"channels", 3},       {"sample_id", g.sample_id},
                      {"normalized", g.normalized}};
  if (g.constants) j["constants"] = {{"shear", g.constants->shear}, {"normal", g.constants->normal}};
  const Vec3 t = g.total();
  j["total"] = {t.x(), t.y(), t.z()};
  return j;
}

void save_label(const std::string& path, const ForceGrid& g, const nlohmann::json& extra) {
  {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write " + path);
    write_fgrd(out, g);
  }
  nlohmann::json side = sidecar_json(g);
  side.update(extra);
  std::ofstream js(path + ".json");
  if (!js) throw FormatError("cannot write " + path + ".json");
  js << side.dump(2) << "\n";
}

ForceGrid load_label(const std::string& path, nlohmann::json* sidecar) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open label " + path);
  ForceGrid g = read_fgrd(in);
  std::ifstream js(path + ".json");
  if (js) {
    nlohmann::json side;
    try {
      side = nlohmann::json::parse(js);
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("bad sidecar " + path + ".json: " + e.what());
    }
    if (side.value("width", g.width()) != g.width() || side.value("height", g.height()) != g.height()) {
      throw FormatError("sidecar " + path + ".json disagrees with the grid dimensions");
    }
    g.sample_id = side.value("sample_id", std::string());
    g.normalized = side.value("normalized", false);
    if (side.contains("constants")) {
      g.constants = NormalizationConstants{side["constants"].at("shear").get<double>(),
                                           side["constants"].at("normal").get<double>()};
    }
    if (sidecar) *sidecar = std::move(side);
  }
  return g;
}

}  // namespace gelforce
